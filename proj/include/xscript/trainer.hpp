#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xscript/alignment.hpp"
#include "xscript/encoder.hpp"
#include "xscript/fusion.hpp"
#include "xscript/metrics.hpp"
#include "xscript/tensor.hpp"
#include "xscript/text.hpp"

namespace xscript {

// Model variants: the full two-encoder fusion model, the same model with one
// loss term removed, or a single-encoder classifier with no fusion at all.
enum class Ablation { none, no_reg, no_align, baseline_roman, baseline_deva };

Ablation parse_ablation(const std::string& text);  // ConfigError
const std::string& ablation_name(Ablation ablation);
bool is_baseline(Ablation ablation);

// Which script's states provide the cross-attention queries (the other
// provides keys and values).
enum class QueryScript { roman, deva };

QueryScript parse_query_script(const std::string& text);  // ConfigError
const std::string& query_script_name(QueryScript script);

struct TrainConfig {
  double alpha = 1.0;  // weight of the whole alignment bundle
  double beta = 0.7;   // weight of the cross-script alignment term
  double gamma = 0.7;  // weight of the frozen-reference term
  int align_layer = 1;  // 1-based hidden layer the distances read
  double learning_rate = 2e-5;
  int batch_size = 32;
  int max_len = 100;
  int patience = 3;
  int max_epochs = 20;
  std::uint64_t seed = 1;
  QueryScript query_script = QueryScript::roman;
  Ablation ablation = Ablation::none;

  void validate(int num_layers) const;  // ConfigError

  // Copy with the ablation folded into the weights: no-align forces alpha=0,
  // no-reg forces gamma=0, baselines have no alignment machinery at all.
  TrainConfig resolved() const;
};

// L = ce + alpha * (beta * sa + gamma * reg). Non-finite input raises
// NumericError naming the offending component. With alpha = 0 the result is
// `ce` itself, exactly.
double combined_loss_value(double ce, double sa, double reg,
                           const TrainConfig& config);

// Same formula as a graph node. Terms whose effective weight is zero are not
// touched, so `sa`/`reg` may be default-constructed tensors then; a defined
// term with nonzero weight must be a finite scalar.
Tensor combined_loss(const Tensor& ce, const Tensor& sa, const Tensor& reg,
                     const TrainConfig& config);

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias-corrected moments. Parameters are leaf tensors;
// step() reads each tensor's current gradient buffer and updates its data in
// place. A parameter backward never touched contributes zero gradient.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});  // ConfigError

  void step();
  void zero_grad();
  std::int64_t steps_taken() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig config_;
  std::int64_t steps_ = 0;
};

// Strict-improvement early stopping: observe() each epoch's validation
// metric; returns true once `patience` consecutive epochs failed to beat the
// best seen.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);  // ConfigError when patience < 1

  bool observe(double metric);
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }  // 1-based

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int streak_ = 0;
  double best_ = -1.0;
};

// Everything a trained model is: two script encoders, the fusion head, the
// vocabularies that defined their input space, and (after snapshot) the
// frozen reference copy of the Devanagari encoder.
struct ModelBundle {
  EncoderConfig roman_config;
  EncoderConfig deva_config;
  FusionConfig fusion_config;
  Vocabulary roman_vocab;
  Vocabulary deva_vocab;
  EncoderParams roman;
  EncoderParams deva;
  EncoderParams frozen_deva;
  FusionParams fusion;
  bool has_snapshot = false;

  // Builds vocabularies from the training split, then initializes parameters
  // with seeds derived from `seed` (roman, deva, fusion get seed, seed+1,
  // seed+2). `arch.vocab_size` is overwritten per script.
  static ModelBundle init(const std::vector<ScriptPairExample>& train_split,
                          EncoderConfig arch, FusionConfig fusion_config,
                          std::uint64_t seed, int min_frequency = 1);

  // Same structure from already-built vocabularies, for restoring a saved
  // model: parameter values are placeholders until a checkpoint overwrites
  // them. Identical to init on the vocabularies the training split produces.
  static ModelBundle with_vocabs(EncoderConfig arch, FusionConfig fusion_config,
                                 Vocabulary roman_vocab, Vocabulary deva_vocab,
                                 std::uint64_t seed);

  // Freezes the current Devanagari encoder as the regularization reference.
  void snapshot();

  // The leaf tensors the optimizer updates under the given ablation.
  // Baselines train one encoder plus the classifier; everything else trains
  // both encoders and the full fusion head. Never includes the snapshot.
  std::vector<Tensor> trainable(Ablation ablation) const;

  // Stable names for checkpointing: roman.*, deva.*, fusion.*, and frozen.*
  // when a snapshot exists.
  NamedTensors named_params() const;
};

// Class probabilities [B,3] for a batch under the given model variant. For
// the full model the two optional out-params receive the per-layer states the
// loss terms read; baselines fill only their own encoder's states.
Tensor forward_probs(const ModelBundle& bundle, const Batch& batch,
                     Ablation ablation, QueryScript query_script,
                     EncoderStates* roman_states = nullptr,
                     EncoderStates* deva_states = nullptr);

struct BatchLoss {
  Tensor total;
  double ce = 0.0;
  double sa = 0.0;   // raw values, before alpha/beta/gamma weighting
  double reg = 0.0;
};

// Forward plus composite loss for one batch. Loss terms whose effective
// weight is zero are never computed, so a zero-weight run builds exactly the
// cross-entropy-only graph.
BatchLoss batch_loss(const ModelBundle& bundle, const Batch& batch,
                     const TrainConfig& config);

// Argmax predictions over examples, in batches of config.batch_size.
std::vector<int> predict(const ModelBundle& bundle,
                         const std::vector<ScriptPairExample>& examples,
                         const TrainConfig& config);

// predict() + evaluate_predictions() on gold labels.
EvalMetrics evaluate_bundle(const ModelBundle& bundle,
                            const std::vector<ScriptPairExample>& examples,
                            const TrainConfig& config);

// Mean distance between the live Devanagari encoder and its snapshot on the
// given examples at `layer`; the quantity the frozen-reference loss drives
// down. ConfigError without a snapshot.
double snapshot_divergence(const ModelBundle& bundle,
                           const std::vector<ScriptPairExample>& examples,
                           int layer, const TrainConfig& config);

struct EpochStats {
  double ce = 0.0;
  double sa = 0.0;
  double reg = 0.0;
  double val_f1 = 0.0;
};

struct RunResult {
  TrainConfig config;
  std::vector<EpochStats> epochs;
  double best_val_f1 = 0.0;
  int best_epoch = 0;     // 1-based
  int stopped_epoch = 0;  // number of epochs actually run
  double test_f1 = 0.0;
};

// Full training run: snapshot before epoch 1, seeded shuffling, Adam steps
// per mini-batch, validation weighted-F1 early stopping, best-epoch parameter
// restore, then test evaluation. Non-finite loss aborts with a NumericError
// carrying every component's value. The bundle is left holding the
// best-validation parameters.
RunResult train_loop(ModelBundle& bundle, const Dataset& data,
                     const TrainConfig& config);

// Exhaustive hyperparameter product. Axes may not be empty.
struct GridSpec {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> gammas;
  std::vector<int> layers;

  void validate() const;  // ConfigError
  std::size_t cell_count() const;
  // Cell `index` in row-major order (alphas outermost, layers innermost)
  // applied on top of `base`.
  TrainConfig cell_config(const TrainConfig& base, std::size_t index) const;
};

// Sweep holding everything at `base` and varying only the read layer.
GridSpec layer_sweep_spec(const TrainConfig& base, int num_layers);

struct GridCellResult {
  std::size_t index = 0;
  TrainConfig config;
  bool ok = false;
  RunResult result;   // meaningful iff ok
  std::string error;  // set iff !ok
};

using CellRunner = std::function<RunResult(const TrainConfig&, std::size_t)>;

// Runs every cell through `runner` (which may train from scratch, or load a
// completed result from disk to support resuming). A throwing cell is
// recorded as failed and the sweep continues.
std::vector<GridCellResult> grid_search(const TrainConfig& base,
                                        const GridSpec& grid,
                                        const CellRunner& runner);

// Cell indices ordered best-first by validation F1, ties broken by lower
// index; failed cells trail in index order.
std::vector<std::size_t> rank_cells(const std::vector<GridCellResult>& cells);

}  // namespace xscript
