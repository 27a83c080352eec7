#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "xscript/fusion.hpp"
#include "xscript/synthetic.hpp"
#include "xscript/trainer.hpp"

namespace xscript {

// Every command resolves its options (config file plus flag overrides),
// writes its artifacts into one output directory, and freezes the resolved
// options in <out>/manifest.json. Re-running a command with --config pointing
// at that manifest reproduces every artifact byte for byte.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;     // paths relative to the out dir
  nlohmann::ordered_json report;          // command-specific headline numbers

  std::string to_text() const;            // serialized manifest.json payload
};

// Reads a JSON options file: either a bare options object or a manifest
// produced by `command` (its "config" object is taken; a manifest written by
// a different command is rejected).
nlohmann::ordered_json load_config_file(const std::string& path,
                                        const std::string& command);

struct GenSyntheticOptions {
  std::string out_dir;
  SyntheticSpec spec;

  nlohmann::ordered_json to_json() const;
  [[nodiscard]] static GenSyntheticOptions from_json(const nlohmann::ordered_json& j);
};

struct TrainOptions {
  std::string data_dir;
  std::string out_dir;
  TrainConfig config;
  int num_layers = 2;
  int num_heads = 4;
  int d_model = 32;
  int d_ff = 64;
  Pooling pooling = Pooling::mean;
  int min_frequency = 1;

  EncoderConfig arch() const;             // max_len mirrors config.max_len
  FusionConfig fusion() const;
  nlohmann::ordered_json to_json() const;
  [[nodiscard]] static TrainOptions from_json(const nlohmann::ordered_json& j);
};

struct EvalOptions {
  std::string run_dir;
  std::string data_dir;                   // empty: the run's recorded dataset
  std::string split = "test";
  std::string out_dir;                    // empty: <run>/eval_<split>

  nlohmann::ordered_json to_json() const;
  [[nodiscard]] static EvalOptions from_json(const nlohmann::ordered_json& j);
};

struct GridOptions {
  TrainOptions base;                      // base.out_dir is the grid root
  std::string grid_file;                  // {alphas, betas, gammas, layers}
  bool sweep_layer = false;               // every layer, other axes fixed

  nlohmann::ordered_json to_json() const;
  [[nodiscard]] static GridOptions from_json(const nlohmann::ordered_json& j);
};

struct ExplainOptions {
  std::string run_dir;
  std::string data_dir;                   // with index: dataset to pick from
  int index = -1;                         // test-split sentence index
  std::string roman_text;                 // inline alternative to index
  std::string deva_text;
  int explained_class = -1;               // -1: the model's prediction
  bool sampled = false;
  int num_permutations = 10000;
  std::uint64_t seed = 1;
  std::string format = "ansi";            // ansi | html
  std::string out_dir;                    // empty: <run>/explain
  std::string compare_baseline;           // second run dir to show alongside

  nlohmann::ordered_json to_json() const;
  [[nodiscard]] static ExplainOptions from_json(const nlohmann::ordered_json& j);
};

// Dataset TSVs plus the generator lexicon; the manifest report carries the
// single-script oracle accuracies.
RunManifest cmd_gen_synthetic(const GenSyntheticOptions& options);

// Full training run: checkpoint, vocabularies, per-epoch result.json.
RunManifest cmd_train(const TrainOptions& options);

// Restores a saved run and scores one split: metrics.json with weighted F1,
// per-class precision/recall/F1, and the confusion matrix.
RunManifest cmd_eval(const EvalOptions& options);

// Trains one cell per grid point (resuming past cells found on disk), ranks
// them into summary.tsv, and for --sweep-layer also writes the F1-vs-layer
// curve.tsv.
RunManifest cmd_grid(const GridOptions& options);

// Shapley attribution for one sentence: attribution JSON plus an ANSI or
// HTML plot, optionally side by side with a second model's attribution.
RunManifest cmd_explain(const ExplainOptions& options);

// Rebuilds the model a training run saved: vocabularies, architecture from
// the run's manifest, parameters from the checkpoint.
ModelBundle restore_bundle(const std::string& run_dir, TrainOptions* options = nullptr);

// result.json payload round-trip.
std::string run_result_json(const RunResult& result);
RunResult run_result_from_json(const nlohmann::ordered_json& j);

}  // namespace xscript
