#include "xscript/metrics.hpp"

#include <string>

#include "xscript/errors.hpp"

namespace xscript {

EvalMetrics evaluate_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  if (labels.empty()) throw DataError("cannot evaluate an empty prediction set");
  if (predictions.size() != labels.size())
    throw DataError("prediction count " + std::to_string(predictions.size()) +
                    " does not match label count " +
                    std::to_string(labels.size()));
  EvalMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
      throw DataError("class index outside the 3 classes at position " +
                      std::to_string(i));
    ++m.confusion[t][p];
  }
  double weighted = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    int tp = m.confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += m.confusion[o][c];
      fn += m.confusion[c][o];
    }
    ClassMetrics& cm = m.per_class[c];
    cm.support = tp + fn;
    cm.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    cm.recall = cm.support ? static_cast<double>(tp) / cm.support : 0.0;
    cm.f1 = (cm.precision + cm.recall) > 0.0
                ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0.0;
    weighted += cm.f1 * cm.support;
  }
  m.weighted_f1 = weighted / static_cast<double>(labels.size());
  return m;
}

double weighted_f1(const std::vector<int>& predictions,
                   const std::vector<int>& labels) {
  return evaluate_predictions(predictions, labels).weighted_f1;
}

}  // namespace xscript
