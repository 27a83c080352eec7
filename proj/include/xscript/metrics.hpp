#pragma once

#include <array>
#include <vector>

#include "xscript/text.hpp"

namespace xscript {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct EvalMetrics {
  double weighted_f1 = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class;
  // confusion[true_class][predicted_class]
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};
};

// Per-class F1 = 2PR/(P+R), zero when P+R = 0; weighted by class support.
// DataError on empty input or out-of-range values.
EvalMetrics evaluate_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels);

double weighted_f1(const std::vector<int>& predictions,
                   const std::vector<int>& labels);

}  // namespace xscript
