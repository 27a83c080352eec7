#include "xscript/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "xscript/errors.hpp"

namespace xscript {
namespace {

constexpr int kMaxExactWords = 12;

void require_words(const std::vector<std::string>& words) {
  if (words.empty()) throw DataError("cannot attribute an empty sentence");
}

double popcount_weight(int subset_size, int n) {
  // |S|! (n-1-|S|)! / n!, computed exactly: factorials up to 12! fit double.
  double num = 1.0;
  for (int k = 2; k <= subset_size; ++k) num *= k;
  for (int k = 2; k <= n - 1 - subset_size; ++k) num *= k;
  double den = 1.0;
  for (int k = 2; k <= n; ++k) den *= k;
  return num / den;
}

std::vector<bool> mask_of(std::uint32_t bits, int n) {
  std::vector<bool> keep(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) keep[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
  return keep;
}

std::string escape_html(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Shade {
  int r = 0, g = 0, b = 0;
  bool on = false;
};

Shade shade_for(double value, double max_abs) {
  Shade s;
  if (max_abs <= 0.0 || value == 0.0) return s;
  const int k = static_cast<int>(std::lround(255.0 * std::abs(value) / max_abs));
  if (k == 0) return s;
  s.on = true;
  if (value > 0.0) {
    s.r = 255; s.g = 255 - k; s.b = 255 - k;
  } else {
    s.r = 255 - k; s.g = 255 - k; s.b = 255;
  }
  return s;
}

}  // namespace

ValueFunction model_value_function(const ModelBundle& bundle,
                                   const ScriptPairExample& example,
                                   const TrainConfig& config, int class_index) {
  if (example.roman_words.size() != example.deva_words.size())
    throw DataError("paired masking needs equal word counts, got " +
                    std::to_string(example.roman_words.size()) + " vs " +
                    std::to_string(example.deva_words.size()));
  require_words(example.roman_words);
  const int n = static_cast<int>(example.roman_words.size());
  if (n + 1 > config.max_len)
    throw DataError("sentence of " + std::to_string(n) +
                    " words does not fit max_len " +
                    std::to_string(config.max_len) +
                    " with the leading CLS; truncated words cannot be attributed");
  if (class_index < 0 || class_index >= kNumClasses)
    throw ConfigError("class index " + std::to_string(class_index) +
                      " out of range [0, " + std::to_string(kNumClasses) + ")");

  Batch base = make_batch({example}, bundle.roman_vocab, bundle.deva_vocab,
                          config.max_len);
  return [&bundle, base = std::move(base), n, class_index,
          ablation = config.ablation,
          query = config.query_script](const std::vector<bool>& keep) {
    if (static_cast<int>(keep.size()) != n)
      throw ShapeError("coalition mask has " + std::to_string(keep.size()) +
                       " entries for " + std::to_string(n) + " words");
    Batch b = base;
    for (int i = 0; i < n; ++i) {
      if (keep[static_cast<std::size_t>(i)]) continue;
      b.roman_ids[static_cast<std::size_t>(i + 1)] = Vocabulary::kUnk;
      b.deva_ids[static_cast<std::size_t>(i + 1)] = Vocabulary::kUnk;
    }
    Tensor probs = forward_probs(bundle, b, ablation, query);
    return probs.at({0, class_index});
  };
}

Attribution shapley_exact(const std::vector<std::string>& words,
                          const ValueFunction& v, int class_index) {
  require_words(words);
  const int n = static_cast<int>(words.size());
  if (n > kMaxExactWords)
    throw ConfigError("exact attribution enumerates 2^n coalitions and "
                      "supports at most " + std::to_string(kMaxExactWords) +
                      " words, got " + std::to_string(n) +
                      "; use shapley_sampled");

  const std::uint32_t count = 1u << n;
  std::vector<double> value(count);
  for (std::uint32_t bits = 0; bits < count; ++bits)
    value[bits] = v(mask_of(bits, n));

  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s)
    weight[static_cast<std::size_t>(s)] = popcount_weight(s, n);

  Attribution attr;
  attr.words = words;
  attr.values.assign(static_cast<std::size_t>(n), 0.0);
  attr.base_value = value[0];
  attr.explained_class = class_index;
  attr.mode = "exact";
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    double total = 0.0;
    for (std::uint32_t bits = 0; bits < count; ++bits) {
      if (bits & bit) continue;
      const int s = std::popcount(bits);
      total += weight[static_cast<std::size_t>(s)] *
               (value[bits | bit] - value[bits]);
    }
    attr.values[static_cast<std::size_t>(i)] = total;
  }
  return attr;
}

Attribution shapley_sampled(const std::vector<std::string>& words,
                            const ValueFunction& v, int class_index,
                            int num_permutations, std::uint64_t seed) {
  require_words(words);
  if (num_permutations < 50)
    throw ConfigError("sampled attribution needs at least 50 permutations, got " +
                      std::to_string(num_permutations));
  const int n = static_cast<int>(words.size());

  // v is pure, so coalition values are memoized across permutations whenever
  // the mask fits a 64-bit key.
  std::unordered_map<std::uint64_t, double> memo;
  std::vector<bool> keep(static_cast<std::size_t>(n), false);
  auto eval = [&](const std::vector<bool>& mask) {
    if (n > 64) return v(mask);
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i)
      if (mask[static_cast<std::size_t>(i)]) key |= std::uint64_t{1} << i;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double val = v(mask);
    memo.emplace(key, val);
    return val;
  };

  const double base = eval(keep);
  std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(n), 0.0);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (int p = 0; p < num_permutations; ++p) {
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(keep.begin(), keep.end(), false);
    double prev = base;
    for (int i : order) {
      keep[static_cast<std::size_t>(i)] = true;
      const double cur = eval(keep);
      const double marginal = cur - prev;
      sum[static_cast<std::size_t>(i)] += marginal;
      sum_sq[static_cast<std::size_t>(i)] += marginal * marginal;
      prev = cur;
    }
  }

  Attribution attr;
  attr.words = words;
  attr.values.assign(static_cast<std::size_t>(n), 0.0);
  attr.stderrs.assign(static_cast<std::size_t>(n), 0.0);
  attr.base_value = base;
  attr.explained_class = class_index;
  attr.mode = "sampled";
  const double p = num_permutations;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double mean = sum[k] / p;
    attr.values[k] = mean;
    const double variance = std::max(0.0, (sum_sq[k] - p * mean * mean) / (p - 1.0));
    attr.stderrs[k] = std::sqrt(variance / p);
  }
  return attr;
}

Attribution shapley_exact(const ModelBundle& bundle,
                          const ScriptPairExample& example,
                          const TrainConfig& config, int class_index) {
  const ValueFunction v = model_value_function(bundle, example, config, class_index);
  return shapley_exact(example.roman_words, v, class_index);
}

Attribution shapley_sampled(const ModelBundle& bundle,
                            const ScriptPairExample& example,
                            const TrainConfig& config, int class_index,
                            int num_permutations, std::uint64_t seed) {
  const ValueFunction v = model_value_function(bundle, example, config, class_index);
  return shapley_sampled(example.roman_words, v, class_index, num_permutations,
                         seed);
}

PlotFormat parse_plot_format(const std::string& name) {
  if (name == "ansi") return PlotFormat::ansi;
  if (name == "html") return PlotFormat::html;
  throw ConfigError("unknown plot format \"" + name + "\" (expected ansi or html)");
}

std::string render_text_plot(const Attribution& attr, PlotFormat format) {
  if (attr.words.size() != attr.values.size())
    throw ShapeError("attribution has " + std::to_string(attr.words.size()) +
                     " words but " + std::to_string(attr.values.size()) +
                     " values");
  double max_abs = 0.0;
  for (double v : attr.values) max_abs = std::max(max_abs, std::abs(v));

  std::string out;
  if (format == PlotFormat::html) out += "<div class=\"shap-plot\">";
  for (std::size_t i = 0; i < attr.words.size(); ++i) {
    if (i > 0) out += ' ';
    const Shade s = shade_for(attr.values[i], max_abs);
    if (format == PlotFormat::ansi) {
      if (s.on) {
        out += "\x1b[38;2;0;0;0;48;2;" + std::to_string(s.r) + ';' +
               std::to_string(s.g) + ';' + std::to_string(s.b) + 'm';
        out += attr.words[i];
        out += "\x1b[0m";
      } else {
        out += attr.words[i];
      }
    } else {
      if (s.on) {
        out += "<span style=\"background-color:rgb(" + std::to_string(s.r) +
               ',' + std::to_string(s.g) + ',' + std::to_string(s.b) + ")\">";
      } else {
        out += "<span>";
      }
      out += escape_html(attr.words[i]);
      out += "</span>";
    }
  }
  if (format == PlotFormat::html) out += "</div>";
  out += '\n';
  return out;
}

std::string attribution_json(const Attribution& attr) {
  nlohmann::ordered_json j;
  j["words"] = attr.words;
  j["values"] = attr.values;
  j["base_value"] = attr.base_value;
  j["class"] = attr.explained_class;
  j["mode"] = attr.mode;
  if (attr.mode == "sampled") j["stderr"] = attr.stderrs;
  return j.dump(2) + "\n";
}

}  // namespace xscript
