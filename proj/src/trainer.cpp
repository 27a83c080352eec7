#include "xscript/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "xscript/errors.hpp"

namespace xscript {

namespace {

const std::string kAblationNames[] = {"none", "no-reg", "no-align",
                                      "baseline-roman", "baseline-deva"};
const std::string kQueryScriptNames[] = {"roman", "deva"};

void require_finite(double v, const char* component) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "combined loss: " << component << " is not finite (" << v << ")";
    throw NumericError(os.str());
  }
}

}  // namespace

Ablation parse_ablation(const std::string& text) {
  for (int i = 0; i < 5; ++i)
    if (text == kAblationNames[i]) return static_cast<Ablation>(i);
  throw ConfigError("unknown ablation '" + text +
                    "' (expected none, no-reg, no-align, baseline-roman or "
                    "baseline-deva)");
}

const std::string& ablation_name(Ablation ablation) {
  return kAblationNames[static_cast<int>(ablation)];
}

bool is_baseline(Ablation ablation) {
  return ablation == Ablation::baseline_roman ||
         ablation == Ablation::baseline_deva;
}

QueryScript parse_query_script(const std::string& text) {
  for (int i = 0; i < 2; ++i)
    if (text == kQueryScriptNames[i]) return static_cast<QueryScript>(i);
  throw ConfigError("unknown query script '" + text +
                    "' (expected roman or deva)");
}

const std::string& query_script_name(QueryScript script) {
  return kQueryScriptNames[static_cast<int>(script)];
}

void TrainConfig::validate(int num_layers) const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw ConfigError("loss weights must be >= 0");
  if (align_layer < 1 || align_layer > num_layers) {
    std::ostringstream os;
    os << "align_layer " << align_layer << " out of range [1, " << num_layers
       << "]";
    throw ConfigError(os.str());
  }
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_len < 2) throw ConfigError("max_len must be >= 2");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig c = *this;
  if (ablation == Ablation::no_align || is_baseline(ablation)) c.alpha = 0.0;
  if (ablation == Ablation::no_reg) c.gamma = 0.0;
  return c;
}

double combined_loss_value(double ce, double sa, double reg,
                           const TrainConfig& config) {
  require_finite(ce, "task loss");
  require_finite(sa, "alignment loss");
  require_finite(reg, "reference loss");
  if (config.alpha == 0.0) return ce;
  return ce + config.alpha * (config.beta * sa + config.gamma * reg);
}

Tensor combined_loss(const Tensor& ce, const Tensor& sa, const Tensor& reg,
                     const TrainConfig& config) {
  if (!ce.defined() || ce.size() != 1)
    throw ShapeError("combined loss: task loss must be a defined scalar");
  require_finite(ce.value(), "task loss");
  const bool want_sa = config.alpha != 0.0 && config.beta != 0.0;
  const bool want_reg = config.alpha != 0.0 && config.gamma != 0.0;
  if (want_sa) {
    if (!sa.defined() || sa.size() != 1)
      throw ConfigError(
          "combined loss: alignment term has nonzero weight but no value");
    require_finite(sa.value(), "alignment loss");
  }
  if (want_reg) {
    if (!reg.defined() || reg.size() != 1)
      throw ConfigError(
          "combined loss: reference term has nonzero weight but no value");
    require_finite(reg.value(), "reference loss");
  }
  if (!want_sa && !want_reg) return ce;
  Tensor bundle;
  if (want_sa && want_reg)
    bundle = add(scale(sa, config.beta), scale(reg, config.gamma));
  else if (want_sa)
    bundle = scale(sa, config.beta);
  else
    bundle = scale(reg, config.gamma);
  return add(ce, scale(bundle, config.alpha));
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (config_.learning_rate <= 0.0)
    throw ConfigError("Adam learning rate must be > 0");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    if (!p.defined() || !p.requires_grad())
      throw ConfigError("Adam parameters must be trainable leaf tensors");
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::vector<double>& x = params_[i].mutable_data();
    const std::vector<double> g = params_[i].grad();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      x[j] -= config_.learning_rate * m_hat /
              (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopper::observe(double metric) {
  ++epoch_;
  if (metric > best_) {
    best_ = metric;
    best_epoch_ = epoch_;
    streak_ = 0;
  } else {
    ++streak_;
  }
  return streak_ >= patience_;
}

ModelBundle ModelBundle::init(const std::vector<ScriptPairExample>& train_split,
                              EncoderConfig arch, FusionConfig fusion_config,
                              std::uint64_t seed, int min_frequency) {
  auto [rv, dv] = build_vocabs(train_split, min_frequency);
  return with_vocabs(arch, fusion_config, std::move(rv), std::move(dv), seed);
}

ModelBundle ModelBundle::with_vocabs(EncoderConfig arch,
                                     FusionConfig fusion_config,
                                     Vocabulary roman_vocab,
                                     Vocabulary deva_vocab,
                                     std::uint64_t seed) {
  if (fusion_config.d_model != arch.d_model)
    throw ConfigError("fusion d_model must match the encoders' d_model");
  ModelBundle mb;
  mb.roman_vocab = std::move(roman_vocab);
  mb.deva_vocab = std::move(deva_vocab);
  mb.roman_config = arch;
  mb.roman_config.vocab_size = mb.roman_vocab.size();
  mb.roman_config.seed = seed;
  mb.deva_config = arch;
  mb.deva_config.vocab_size = mb.deva_vocab.size();
  mb.deva_config.seed = seed + 1;
  mb.fusion_config = fusion_config;
  mb.fusion_config.seed = seed + 2;
  mb.roman = EncoderParams::init(mb.roman_config);
  mb.deva = EncoderParams::init(mb.deva_config);
  mb.fusion = FusionParams::init(mb.fusion_config);
  return mb;
}

void ModelBundle::snapshot() {
  frozen_deva = deva.frozen_copy();
  has_snapshot = true;
}

std::vector<Tensor> ModelBundle::trainable(Ablation ablation) const {
  std::vector<Tensor> out;
  auto push_named = [&out](const NamedTensors& named) {
    for (const auto& [name, t] : named) out.push_back(t);
  };
  if (ablation == Ablation::baseline_roman) {
    push_named(roman.named_params(""));
    out.push_back(fusion.cls_w);
    out.push_back(fusion.cls_b);
    return out;
  }
  if (ablation == Ablation::baseline_deva) {
    push_named(deva.named_params(""));
    out.push_back(fusion.cls_w);
    out.push_back(fusion.cls_b);
    return out;
  }
  push_named(roman.named_params(""));
  push_named(deva.named_params(""));
  push_named(fusion.named_params(""));
  return out;
}

NamedTensors ModelBundle::named_params() const {
  NamedTensors out = roman.named_params("roman.");
  NamedTensors d = deva.named_params("deva.");
  out.insert(out.end(), d.begin(), d.end());
  NamedTensors f = fusion.named_params("fusion.");
  out.insert(out.end(), f.begin(), f.end());
  if (has_snapshot) {
    NamedTensors z = frozen_deva.named_params("frozen.");
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

Tensor forward_probs(const ModelBundle& bundle, const Batch& batch,
                     Ablation ablation, QueryScript query_script,
                     EncoderStates* roman_states, EncoderStates* deva_states) {
  if (ablation == Ablation::baseline_roman) {
    EncoderStates s = encoder_forward(bundle.roman, batch.roman_ids,
                                      batch.roman_mask, batch.size,
                                      batch.max_len);
    Tensor probs = pool_and_classify(s.last(), batch.roman_mask, bundle.fusion);
    if (roman_states) *roman_states = std::move(s);
    return probs;
  }
  if (ablation == Ablation::baseline_deva) {
    EncoderStates s = encoder_forward(bundle.deva, batch.deva_ids,
                                      batch.deva_mask, batch.size,
                                      batch.max_len);
    Tensor probs = pool_and_classify(s.last(), batch.deva_mask, bundle.fusion);
    if (deva_states) *deva_states = std::move(s);
    return probs;
  }
  EncoderStates sr = encoder_forward(bundle.roman, batch.roman_ids,
                                     batch.roman_mask, batch.size,
                                     batch.max_len);
  EncoderStates sd = encoder_forward(bundle.deva, batch.deva_ids,
                                     batch.deva_mask, batch.size,
                                     batch.max_len);
  Tensor probs;
  if (query_script == QueryScript::roman) {
    Tensor fused =
        cross_attend(sr.last(), sd.last(), batch.deva_mask, bundle.fusion);
    probs = pool_and_classify(fused, batch.roman_mask, bundle.fusion);
  } else {
    Tensor fused =
        cross_attend(sd.last(), sr.last(), batch.roman_mask, bundle.fusion);
    probs = pool_and_classify(fused, batch.deva_mask, bundle.fusion);
  }
  if (roman_states) *roman_states = std::move(sr);
  if (deva_states) *deva_states = std::move(sd);
  return probs;
}

BatchLoss batch_loss(const ModelBundle& bundle, const Batch& batch,
                     const TrainConfig& config) {
  const TrainConfig rc = config.resolved();
  BatchLoss out;
  EncoderStates sr, sd;
  Tensor probs = forward_probs(bundle, batch, rc.ablation, rc.query_script,
                               &sr, &sd);
  Tensor ce = ce_loss(probs, batch.labels);
  out.ce = ce.value();
  Tensor sa, reg;
  if (rc.alpha != 0.0 && rc.beta != 0.0) {
    sa = alignment_loss(sr, sd, rc.align_layer);
    out.sa = sa.value();
  }
  if (rc.alpha != 0.0 && rc.gamma != 0.0) {
    if (!bundle.has_snapshot)
      throw ConfigError(
          "reference loss requested but the bundle has no frozen snapshot");
    EncoderStates sf = encoder_forward(bundle.frozen_deva, batch.deva_ids,
                                       batch.deva_mask, batch.size,
                                       batch.max_len);
    reg = regularization_loss(sd, sf, rc.align_layer);
    out.reg = reg.value();
  }
  if (!std::isfinite(out.ce) || !std::isfinite(out.sa) ||
      !std::isfinite(out.reg)) {
    std::ostringstream os;
    os << "non-finite loss components (task=" << out.ce
       << " alignment=" << out.sa << " reference=" << out.reg << ")";
    throw NumericError(os.str());
  }
  out.total = combined_loss(ce, sa, reg, rc);
  return out;
}

std::vector<int> predict(const ModelBundle& bundle,
                         const std::vector<ScriptPairExample>& examples,
                         const TrainConfig& config) {
  std::vector<int> preds;
  preds.reserve(examples.size());
  const int n = static_cast<int>(examples.size());
  for (int start = 0; start < n; start += config.batch_size) {
    const int stop = std::min(n, start + config.batch_size);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(examples, idx, bundle.roman_vocab, bundle.deva_vocab,
                         config.max_len);
    Tensor probs = forward_probs(bundle, b, config.ablation,
                                 config.query_script);
    const std::vector<double>& p = probs.data();
    for (int r = 0; r < b.size; ++r) {
      int arg = 0;
      for (int c = 1; c < kNumClasses; ++c)
        if (p[static_cast<std::size_t>(r) * kNumClasses + c] >
            p[static_cast<std::size_t>(r) * kNumClasses + arg])
          arg = c;
      preds.push_back(arg);
    }
  }
  return preds;
}

EvalMetrics evaluate_bundle(const ModelBundle& bundle,
                            const std::vector<ScriptPairExample>& examples,
                            const TrainConfig& config) {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(static_cast<int>(ex.label));
  return evaluate_predictions(predict(bundle, examples, config), labels);
}

double snapshot_divergence(const ModelBundle& bundle,
                           const std::vector<ScriptPairExample>& examples,
                           int layer, const TrainConfig& config) {
  if (!bundle.has_snapshot)
    throw ConfigError("snapshot divergence needs a frozen snapshot");
  if (examples.empty()) throw DataError("snapshot divergence on empty data");
  double total = 0.0;
  const int n = static_cast<int>(examples.size());
  for (int start = 0; start < n; start += config.batch_size) {
    const int stop = std::min(n, start + config.batch_size);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(examples, idx, bundle.roman_vocab, bundle.deva_vocab,
                         config.max_len);
    EncoderStates live = encoder_forward(bundle.deva, b.deva_ids, b.deva_mask,
                                         b.size, b.max_len);
    EncoderStates frozen = encoder_forward(bundle.frozen_deva, b.deva_ids,
                                           b.deva_mask, b.size, b.max_len);
    total += regularization_loss(live, frozen, layer).value() * b.size;
  }
  return total / n;
}

RunResult train_loop(ModelBundle& bundle, const Dataset& data,
                     const TrainConfig& config) {
  config.validate(bundle.roman_config.num_layers);
  if (config.max_len > bundle.roman_config.max_len)
    throw ConfigError("max_len exceeds the encoders' position table");
  if (data.train.empty()) throw DataError("training split is empty");
  if (data.validation.empty()) throw DataError("validation split is empty");
  if (data.test.empty()) throw DataError("test split is empty");

  if (!bundle.has_snapshot) bundle.snapshot();

  std::vector<Tensor> params = bundle.trainable(config.ablation);
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  Adam optimizer(params, adam_cfg);
  EarlyStopper stopper(config.patience);

  RunResult result;
  result.config = config;

  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> best_params;
  const int n_train = static_cast<int>(data.train.size());

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats stats;
    for (int start = 0; start < n_train; start += config.batch_size) {
      const int stop = std::min(n_train, start + config.batch_size);
      std::vector<int> idx(order.begin() + start, order.begin() + stop);
      Batch b = make_batch(data.train, idx, bundle.roman_vocab,
                           bundle.deva_vocab, config.max_len);
      BatchLoss loss;
      try {
        loss = batch_loss(bundle, b, config);
        require_finite(loss.total.value(), "total loss");
      } catch (const NumericError& e) {
        std::ostringstream os;
        os << "training aborted at epoch " << epoch << ", batch "
           << start / config.batch_size << ": " << e.what();
        throw NumericError(os.str());
      }
      optimizer.zero_grad();
      backward(loss.total);
      optimizer.step();
      stats.ce += loss.ce * b.size;
      stats.sa += loss.sa * b.size;
      stats.reg += loss.reg * b.size;
    }
    stats.ce /= n_train;
    stats.sa /= n_train;
    stats.reg /= n_train;

    stats.val_f1 =
        evaluate_bundle(bundle, data.validation, config).weighted_f1;
    result.epochs.push_back(stats);

    const double prev_best = stopper.best();
    const bool stop = stopper.observe(stats.val_f1);
    if (stats.val_f1 > prev_best) {
      best_params.clear();
      for (const Tensor& p : params) best_params.push_back(p.data());
    }
    if (stop) break;
  }

  result.stopped_epoch = static_cast<int>(result.epochs.size());
  result.best_epoch = stopper.best_epoch();
  result.best_val_f1 = stopper.best();
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i].mutable_data() = best_params[i];
  result.test_f1 = evaluate_bundle(bundle, data.test, config).weighted_f1;
  return result;
}

void GridSpec::validate() const {
  if (alphas.empty() || betas.empty() || gammas.empty() || layers.empty())
    throw ConfigError("every grid axis needs at least one value");
}

std::size_t GridSpec::cell_count() const {
  return alphas.size() * betas.size() * gammas.size() * layers.size();
}

TrainConfig GridSpec::cell_config(const TrainConfig& base,
                                  std::size_t index) const {
  validate();
  if (index >= cell_count()) throw ConfigError("grid cell index out of range");
  TrainConfig c = base;
  std::size_t rest = index;
  c.align_layer = layers[rest % layers.size()];
  rest /= layers.size();
  c.gamma = gammas[rest % gammas.size()];
  rest /= gammas.size();
  c.beta = betas[rest % betas.size()];
  rest /= betas.size();
  c.alpha = alphas[rest];
  return c;
}

GridSpec layer_sweep_spec(const TrainConfig& base, int num_layers) {
  if (num_layers < 1) throw ConfigError("layer sweep needs >= 1 layers");
  GridSpec g;
  g.alphas = {base.alpha};
  g.betas = {base.beta};
  g.gammas = {base.gamma};
  g.layers.resize(static_cast<std::size_t>(num_layers));
  std::iota(g.layers.begin(), g.layers.end(), 1);
  return g;
}

std::vector<GridCellResult> grid_search(const TrainConfig& base,
                                        const GridSpec& grid,
                                        const CellRunner& runner) {
  grid.validate();
  std::vector<GridCellResult> cells;
  cells.reserve(grid.cell_count());
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    GridCellResult cell;
    cell.index = i;
    cell.config = grid.cell_config(base, i);
    try {
      cell.result = runner(cell.config, i);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<std::size_t> rank_cells(const std::vector<GridCellResult>& cells) {
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&cells](std::size_t a, std::size_t b) {
                     if (cells[a].ok != cells[b].ok) return cells[a].ok;
                     if (!cells[a].ok) return a < b;
                     if (cells[a].result.best_val_f1 !=
                         cells[b].result.best_val_f1)
                       return cells[a].result.best_val_f1 >
                              cells[b].result.best_val_f1;
                     return a < b;
                   });
  return order;
}

}  // namespace xscript
