#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xscript/text.hpp"
#include "xscript/trainer.hpp"

namespace xscript {

// Per-word attribution of one class's output probability. Scores are Shapley
// values of the coalition game where v(S) evaluates the model with the words
// outside S masked; base_value is v with every word masked.
struct Attribution {
  std::vector<std::string> words;
  std::vector<double> values;      // one signed score per word
  std::vector<double> stderrs;     // per-word standard error; sampled mode only
  double base_value = 0.0;
  int explained_class = 0;
  std::string mode;                // "exact" or "sampled"
};

// Coalition value: keep[i] says whether word i stays visible. The callable
// must be a pure function of the mask.
using ValueFunction = std::function<double(const std::vector<bool>&)>;

// Masks the words outside the coalition with UNK at the same word index in
// both script streams (one side alone would leak the word through the other
// script) and returns the model's probability of class_index. Word counts of
// the two scripts must match and fit within config.max_len with the leading
// CLS (DataError otherwise); class_index must name a valid class
// (ConfigError). Prediction honors config.ablation and config.query_script.
ValueFunction model_value_function(const ModelBundle& bundle,
                                   const ScriptPairExample& example,
                                   const TrainConfig& config, int class_index);

// Exact Shapley values by full coalition enumeration: each v(S) is evaluated
// once, and word i gets the combinatorially weighted average of its marginal
// contributions. Supports at most 12 words (4096 coalitions); longer
// sentences get a ConfigError pointing at shapley_sampled. Satisfies
// efficiency: sum(values) = v(full) - base_value.
Attribution shapley_exact(const std::vector<std::string>& words,
                          const ValueFunction& v, int class_index);

// Monte Carlo estimate: averages each word's marginal contribution over
// num_permutations seeded random insertion orders, with a per-word standard
// error of that mean. num_permutations must be at least 50 (ConfigError).
Attribution shapley_sampled(const std::vector<std::string>& words,
                            const ValueFunction& v, int class_index,
                            int num_permutations, std::uint64_t seed);

// Model-backed convenience wrappers over model_value_function.
Attribution shapley_exact(const ModelBundle& bundle,
                          const ScriptPairExample& example,
                          const TrainConfig& config, int class_index);
Attribution shapley_sampled(const ModelBundle& bundle,
                            const ScriptPairExample& example,
                            const TrainConfig& config, int class_index,
                            int num_permutations, std::uint64_t seed);

enum class PlotFormat { ansi, html };

PlotFormat parse_plot_format(const std::string& name);  // ConfigError

// One-line rendering of the sentence with each word shaded by its score:
// positive red, negative blue, intensity linear in |value| / max|value|.
// Zero-score words (and whole all-zero attributions) are left unshaded.
// ANSI output uses 24-bit background colors; HTML output is a standalone
// fragment with the words entity-escaped.
std::string render_text_plot(const Attribution& attr, PlotFormat format);

// {words, values, base_value, class, mode, stderr?}; stderr appears only in
// sampled mode. Serialized with 2-space indentation and a trailing newline.
std::string attribution_json(const Attribution& attr);

}  // namespace xscript
