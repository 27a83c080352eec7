#include "xscript/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>

#include "xscript/checkpoint.hpp"
#include "xscript/errors.hpp"
#include "xscript/explain.hpp"
#include "xscript/metrics.hpp"
#include "xscript/translit.hpp"

namespace xscript {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw DataError("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw DataError("cannot write " + path);
  out << content;
  if (!out.good()) throw DataError("write failed for " + path);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("output directory must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

ordered_json parse_json(const std::string& text, const std::string& origin) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid JSON in " + origin + ": " + e.what());
  }
}

// Typed field extraction with typo detection: any key the reader never asked
// for is an error.
class JsonFields {
 public:
  JsonFields(const ordered_json& j, std::string context)
      : j_(j), context_(std::move(context)) {
    if (!j.is_object())
      throw ConfigError(context_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    // get<int>() would silently truncate 1.5; require the exact JSON kind.
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw wrong_type(key);
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() && !it->is_number_unsigned())
        throw wrong_type(key);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw wrong_type(key);
    }
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw wrong_type(key);
    }
  }

  void get_enum(const char* key, std::string& out) { get<std::string>(key, out); }

  ConfigError wrong_type(const char* key) const {
    return ConfigError(context_ + ": field \"" + std::string(key) +
                       "\" has the wrong type");
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError(context_ + ": unknown field \"" + item.key() + "\"");
  }

 private:
  const ordered_json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

std::string cell_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cell_%04zu", index);
  return buf;
}

std::string format_f1(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

ordered_json train_config_json(const TrainConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["align_layer"] = c.align_layer;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_len"] = c.max_len;
  j["patience"] = c.patience;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["query_script"] = query_script_name(c.query_script);
  j["ablation"] = ablation_name(c.ablation);
  return j;
}

void train_config_fields(JsonFields& f, TrainConfig& c) {
  f.get("alpha", c.alpha);
  f.get("beta", c.beta);
  f.get("gamma", c.gamma);
  f.get("align_layer", c.align_layer);
  f.get("learning_rate", c.learning_rate);
  f.get("batch_size", c.batch_size);
  f.get("max_len", c.max_len);
  f.get("patience", c.patience);
  f.get("max_epochs", c.max_epochs);
  f.get("seed", c.seed);
  std::string query = query_script_name(c.query_script);
  std::string ablation = ablation_name(c.ablation);
  f.get_enum("query_script", query);
  f.get_enum("ablation", ablation);
  c.query_script = parse_query_script(query);
  c.ablation = parse_ablation(ablation);
}

std::string model_label(Ablation ablation) {
  return ablation == Ablation::none ? "proposed" : ablation_name(ablation);
}

const std::vector<ScriptPairExample>& pick_split(const Dataset& data,
                                                 const std::string& split) {
  if (split == "train") return data.train;
  if (split == "validation") return data.validation;
  if (split == "test") return data.test;
  throw ConfigError("unknown split \"" + split +
                    "\" (expected train, validation, or test)");
}

void write_manifest(const std::string& out_dir, const RunManifest& manifest) {
  write_file(out_dir + "/manifest.json", manifest.to_text());
}

}

std::string RunManifest::to_text() const {
  ordered_json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["artifacts"] = artifacts;
  if (!report.is_null()) j["report"] = report;
  return j.dump(2) + "\n";
}

nlohmann::ordered_json load_config_file(const std::string& path,
                                        const std::string& command) {
  ordered_json j;
  try {
    j = parse_json(read_file(path), path);
  } catch (const DataError& e) {
    // A config file the user pointed at is a configuration problem.
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  if (j.contains("command")) {
    if (j["command"] != command)
      throw ConfigError(path + ": manifest was written by command \"" +
                        j["command"].get<std::string>() + "\", not \"" +
                        command + "\"");
    if (!j.contains("config") || !j["config"].is_object())
      throw ConfigError(path + ": manifest has no config object");
    return j["config"];
  }
  return j;
}

ordered_json GenSyntheticOptions::to_json() const {
  ordered_json j;
  j["out"] = out_dir;
  j["train_size"] = spec.train_size;
  j["validation_size"] = spec.validation_size;
  j["test_size"] = spec.test_size;
  j["seed"] = spec.seed;
  j["cue_placement"] = cue_placement_name(spec.cue_placement);
  j["min_words"] = spec.min_words;
  j["max_words"] = spec.max_words;
  return j;
}

GenSyntheticOptions GenSyntheticOptions::from_json(const ordered_json& j) {
  GenSyntheticOptions o;
  JsonFields f(j, "gen-synthetic config");
  f.get("out", o.out_dir);
  f.get("train_size", o.spec.train_size);
  f.get("validation_size", o.spec.validation_size);
  f.get("test_size", o.spec.test_size);
  f.get("seed", o.spec.seed);
  std::string placement = cue_placement_name(o.spec.cue_placement);
  f.get_enum("cue_placement", placement);
  o.spec.cue_placement = parse_cue_placement(placement);
  f.get("min_words", o.spec.min_words);
  f.get("max_words", o.spec.max_words);
  f.finish();
  return o;
}

EncoderConfig TrainOptions::arch() const {
  EncoderConfig c;
  c.num_layers = num_layers;
  c.num_heads = num_heads;
  c.d_model = d_model;
  c.d_ff = d_ff;
  c.max_len = config.max_len;
  c.seed = config.seed;
  return c;
}

FusionConfig TrainOptions::fusion() const {
  FusionConfig c;
  c.num_heads = num_heads;
  c.d_model = d_model;
  c.pooling = pooling;
  c.seed = config.seed;
  return c;
}

ordered_json TrainOptions::to_json() const {
  ordered_json j;
  j["data"] = data_dir;
  j["out"] = out_dir;
  const ordered_json cfg = train_config_json(config);
  for (const auto& [key, value] : cfg.items()) j[key] = value;
  j["num_layers"] = num_layers;
  j["num_heads"] = num_heads;
  j["d_model"] = d_model;
  j["d_ff"] = d_ff;
  j["pooling"] = pooling_name(pooling);
  j["min_frequency"] = min_frequency;
  return j;
}

TrainOptions TrainOptions::from_json(const ordered_json& j) {
  TrainOptions o;
  JsonFields f(j, "train config");
  f.get("data", o.data_dir);
  f.get("out", o.out_dir);
  train_config_fields(f, o.config);
  f.get("num_layers", o.num_layers);
  f.get("num_heads", o.num_heads);
  f.get("d_model", o.d_model);
  f.get("d_ff", o.d_ff);
  std::string pool = pooling_name(o.pooling);
  f.get_enum("pooling", pool);
  o.pooling = parse_pooling(pool);
  f.get("min_frequency", o.min_frequency);
  f.finish();
  return o;
}

ordered_json EvalOptions::to_json() const {
  ordered_json j;
  j["run"] = run_dir;
  j["data"] = data_dir;
  j["split"] = split;
  j["out"] = out_dir;
  return j;
}

EvalOptions EvalOptions::from_json(const ordered_json& j) {
  EvalOptions o;
  JsonFields f(j, "eval config");
  f.get("run", o.run_dir);
  f.get("data", o.data_dir);
  f.get("split", o.split);
  f.get("out", o.out_dir);
  f.finish();
  return o;
}

ordered_json GridOptions::to_json() const {
  ordered_json j = base.to_json();
  j["grid_file"] = grid_file;
  j["sweep_layer"] = sweep_layer;
  return j;
}

GridOptions GridOptions::from_json(const ordered_json& j) {
  GridOptions o;
  ordered_json rest = j;
  if (rest.is_object()) {
    if (rest.contains("grid_file")) {
      try {
        o.grid_file = rest["grid_file"].get<std::string>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("grid config: field \"grid_file\" has the wrong type");
      }
      rest.erase("grid_file");
    }
    if (rest.contains("sweep_layer")) {
      try {
        o.sweep_layer = rest["sweep_layer"].get<bool>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("grid config: field \"sweep_layer\" has the wrong type");
      }
      rest.erase("sweep_layer");
    }
  }
  o.base = TrainOptions::from_json(rest);
  return o;
}

ordered_json ExplainOptions::to_json() const {
  ordered_json j;
  j["run"] = run_dir;
  j["data"] = data_dir;
  j["index"] = index;
  j["roman"] = roman_text;
  j["deva"] = deva_text;
  j["class"] = explained_class;
  j["sampled"] = sampled;
  j["permutations"] = num_permutations;
  j["seed"] = seed;
  j["format"] = format;
  j["out"] = out_dir;
  j["compare_baseline"] = compare_baseline;
  return j;
}

ExplainOptions ExplainOptions::from_json(const ordered_json& j) {
  ExplainOptions o;
  JsonFields f(j, "explain config");
  f.get("run", o.run_dir);
  f.get("data", o.data_dir);
  f.get("index", o.index);
  f.get("roman", o.roman_text);
  f.get("deva", o.deva_text);
  f.get("class", o.explained_class);
  f.get("sampled", o.sampled);
  f.get("permutations", o.num_permutations);
  f.get("seed", o.seed);
  f.get("format", o.format);
  f.get("out", o.out_dir);
  f.get("compare_baseline", o.compare_baseline);
  f.finish();
  return o;
}

std::string run_result_json(const RunResult& result) {
  ordered_json j;
  j["config"] = train_config_json(result.config);
  j["epochs"] = ordered_json::array();
  for (const EpochStats& e : result.epochs) {
    ordered_json je;
    je["ce"] = e.ce;
    je["sa"] = e.sa;
    je["reg"] = e.reg;
    je["val_f1"] = e.val_f1;
    j["epochs"].push_back(je);
  }
  j["best_val_f1"] = result.best_val_f1;
  j["best_epoch"] = result.best_epoch;
  j["stopped_epoch"] = result.stopped_epoch;
  j["test_f1"] = result.test_f1;
  return j.dump(2) + "\n";
}

RunResult run_result_from_json(const ordered_json& j) {
  RunResult r;
  JsonFields f(j, "run result");
  ordered_json config = train_config_json(r.config);
  f.get("config", config);
  {
    JsonFields cf(config, "run result config");
    train_config_fields(cf, r.config);
    cf.finish();
  }
  ordered_json epochs = ordered_json::array();
  f.get("epochs", epochs);
  for (const ordered_json& je : epochs) {
    EpochStats e;
    JsonFields ef(je, "epoch stats");
    ef.get("ce", e.ce);
    ef.get("sa", e.sa);
    ef.get("reg", e.reg);
    ef.get("val_f1", e.val_f1);
    ef.finish();
    r.epochs.push_back(e);
  }
  f.get("best_val_f1", r.best_val_f1);
  f.get("best_epoch", r.best_epoch);
  f.get("stopped_epoch", r.stopped_epoch);
  f.get("test_f1", r.test_f1);
  f.finish();
  return r;
}

RunManifest cmd_gen_synthetic(const GenSyntheticOptions& options) {
  options.spec.validate();
  const SyntheticResult result = gen_synthetic(options.spec);
  ensure_dir(options.out_dir);
  save_examples_tsv(options.out_dir + "/train.tsv", result.data.train);
  save_examples_tsv(options.out_dir + "/validation.tsv", result.data.validation);
  save_examples_tsv(options.out_dir + "/test.tsv", result.data.test);

  std::string lexicon;
  const SyntheticLexicon& lex = synthetic_lexicon();
  for (const std::string& filler : lex.fillers)
    lexicon += "filler\t" + filler + "\t" + toy_transliterate(filler) + "\t-\n";
  auto cue_rows = [&lexicon](const char* kind, const std::vector<SyntheticCue>& cues) {
    for (const SyntheticCue& cue : cues)
      lexicon += std::string(kind) + "\t" + cue.roman + "\t" + cue.deva + "\t" +
                 label_name(cue.label) + "\n";
  };
  cue_rows("clear", lex.clear_cues);
  cue_rows("deva_advantaged", lex.deva_advantaged);
  cue_rows("roman_advantaged", lex.roman_advantaged);
  write_file(options.out_dir + "/lexicon.tsv", lexicon);

  RunManifest manifest;
  manifest.command = "gen-synthetic";
  manifest.config = options.to_json();
  manifest.seed = options.spec.seed;
  manifest.artifacts = {"train.tsv", "validation.tsv", "test.tsv", "lexicon.tsv"};
  manifest.report["roman_oracle_accuracy"] = result.roman_oracle_accuracy;
  manifest.report["deva_oracle_accuracy"] = result.deva_oracle_accuracy;
  write_manifest(options.out_dir, manifest);
  return manifest;
}

RunManifest cmd_train(const TrainOptions& options) {
  options.config.validate(options.num_layers);
  const Dataset data = load_dataset(options.data_dir);
  ModelBundle bundle = ModelBundle::init(data.train, options.arch(),
                                         options.fusion(), options.config.seed,
                                         options.min_frequency);
  RunResult result = train_loop(bundle, data, options.config);

  ensure_dir(options.out_dir);
  save_checkpoint(options.out_dir + "/checkpoint.bin", bundle.named_params());
  bundle.roman_vocab.save(options.out_dir + "/roman_vocab.txt");
  bundle.deva_vocab.save(options.out_dir + "/deva_vocab.txt");
  write_file(options.out_dir + "/result.json", run_result_json(result));

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = options.to_json();
  manifest.seed = options.config.seed;
  manifest.artifacts = {"checkpoint.bin", "roman_vocab.txt", "deva_vocab.txt",
                        "result.json"};
  manifest.report["best_val_f1"] = result.best_val_f1;
  manifest.report["best_epoch"] = result.best_epoch;
  manifest.report["stopped_epoch"] = result.stopped_epoch;
  manifest.report["test_f1"] = result.test_f1;
  write_manifest(options.out_dir, manifest);
  return manifest;
}

ModelBundle restore_bundle(const std::string& run_dir, TrainOptions* options) {
  const std::string manifest_path = run_dir + "/manifest.json";
  const ordered_json j = parse_json(read_file(manifest_path), manifest_path);
  if (!j.is_object() || !j.contains("command") || j["command"] != "train")
    throw DataError(manifest_path + " was not written by a training run");
  if (!j.contains("config") || !j["config"].is_object())
    throw DataError(manifest_path + " has no config object");
  const TrainOptions topts = TrainOptions::from_json(j["config"]);

  ModelBundle bundle = ModelBundle::with_vocabs(
      topts.arch(), topts.fusion(),
      Vocabulary::load(run_dir + "/roman_vocab.txt"),
      Vocabulary::load(run_dir + "/deva_vocab.txt"), topts.config.seed);
  bundle.snapshot();  // checkpoints always carry the frozen reference
  NamedTensors named = bundle.named_params();
  load_checkpoint_into(run_dir + "/checkpoint.bin", named);
  if (options) *options = topts;
  return bundle;
}

RunManifest cmd_eval(const EvalOptions& options) {
  if (options.run_dir.empty()) throw ConfigError("eval needs a run directory");
  TrainOptions topts;
  const ModelBundle bundle = restore_bundle(options.run_dir, &topts);

  EvalOptions resolved = options;
  if (resolved.data_dir.empty()) resolved.data_dir = topts.data_dir;
  if (resolved.out_dir.empty())
    resolved.out_dir = options.run_dir + "/eval_" + options.split;

  const Dataset data = load_dataset(resolved.data_dir);
  const std::vector<ScriptPairExample>& split = pick_split(data, resolved.split);
  const std::vector<int> predictions = predict(bundle, split, topts.config);
  std::vector<int> labels;
  labels.reserve(split.size());
  for (const ScriptPairExample& ex : split)
    labels.push_back(static_cast<int>(ex.label));
  const EvalMetrics metrics = evaluate_predictions(predictions, labels);

  ordered_json jm;
  jm["split"] = resolved.split;
  jm["data"] = resolved.data_dir;
  jm["weighted_f1"] = metrics.weighted_f1;
  jm["per_class"] = ordered_json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& cm = metrics.per_class[static_cast<std::size_t>(c)];
    ordered_json jc;
    jc["class"] = c;
    jc["label"] = label_name(c);
    jc["precision"] = cm.precision;
    jc["recall"] = cm.recall;
    jc["f1"] = cm.f1;
    jc["support"] = cm.support;
    jm["per_class"].push_back(jc);
  }
  jm["confusion"] = ordered_json::array();
  for (int t = 0; t < kNumClasses; ++t) {
    ordered_json row = ordered_json::array();
    for (int p = 0; p < kNumClasses; ++p)
      row.push_back(metrics.confusion[static_cast<std::size_t>(t)]
                                     [static_cast<std::size_t>(p)]);
    jm["confusion"].push_back(row);
  }

  ensure_dir(resolved.out_dir);
  write_file(resolved.out_dir + "/metrics.json", jm.dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = resolved.to_json();
  manifest.seed = topts.config.seed;
  manifest.artifacts = {"metrics.json"};
  manifest.report["weighted_f1"] = metrics.weighted_f1;
  write_manifest(resolved.out_dir, manifest);
  return manifest;
}

RunManifest cmd_grid(const GridOptions& options) {
  if (options.sweep_layer && !options.grid_file.empty())
    throw ConfigError("pass either a grid file or --sweep-layer, not both");
  GridSpec spec;
  if (options.sweep_layer) {
    spec = layer_sweep_spec(options.base.config, options.base.num_layers);
  } else if (options.grid_file.empty()) {
    throw ConfigError("grid needs a grid file or --sweep-layer");
  } else {
    ordered_json j;
    try {
      j = parse_json(read_file(options.grid_file), options.grid_file);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    JsonFields f(j, options.grid_file);
    f.get("alphas", spec.alphas);
    f.get("betas", spec.betas);
    f.get("gammas", spec.gammas);
    f.get("layers", spec.layers);
    f.finish();
  }
  spec.validate();
  options.base.config.validate(options.base.num_layers);
  for (int layer : spec.layers)
    if (layer < 1 || layer > options.base.num_layers)
      throw ConfigError("grid layer " + std::to_string(layer) +
                        " outside [1, " + std::to_string(options.base.num_layers) +
                        "]");

  const std::string& out = options.base.out_dir;
  ensure_dir(out);

  const CellRunner runner = [&](const TrainConfig& config, std::size_t index) {
    const std::string cell_dir = out + "/" + cell_name(index);
    const std::string result_path = cell_dir + "/result.json";
    if (fs::exists(result_path))  // completed cell from an earlier invocation
      return run_result_from_json(parse_json(read_file(result_path), result_path));
    TrainOptions cell = options.base;
    cell.config = config;
    cell.out_dir = cell_dir;
    cmd_train(cell);
    return run_result_from_json(parse_json(read_file(result_path), result_path));
  };

  const std::vector<GridCellResult> cells =
      grid_search(options.base.config, spec, runner);
  const std::vector<std::size_t> order = rank_cells(cells);

  std::string summary =
      "rank\tcell\talpha\tbeta\tgamma\talign_layer\tbest_val_f1\ttest_f1\t"
      "best_epoch\tstatus\n";
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const GridCellResult& cell = cells[order[rank]];
    summary += std::to_string(rank + 1) + "\t" + cell_name(cell.index) + "\t";
    char axes[128];
    std::snprintf(axes, sizeof(axes), "%g\t%g\t%g\t%d\t", cell.config.alpha,
                  cell.config.beta, cell.config.gamma, cell.config.align_layer);
    summary += axes;
    if (cell.ok) {
      summary += format_f1(cell.result.best_val_f1) + "\t" +
                 format_f1(cell.result.test_f1) + "\t" +
                 std::to_string(cell.result.best_epoch) + "\tok\n";
    } else {
      std::string error = cell.error;
      std::replace(error.begin(), error.end(), '\t', ' ');
      std::replace(error.begin(), error.end(), '\n', ' ');
      summary += "-\t-\t-\tfailed: " + error + "\n";
    }
  }
  write_file(out + "/summary.tsv", summary);

  RunManifest manifest;
  manifest.command = "grid";
  manifest.config = options.to_json();
  manifest.seed = options.base.config.seed;
  manifest.artifacts = {"summary.tsv"};

  if (options.sweep_layer) {
    std::string curve = "layer\tval_f1\ttest_f1\n";
    for (const GridCellResult& cell : cells) {
      curve += std::to_string(cell.config.align_layer) + "\t";
      if (cell.ok)
        curve += format_f1(cell.result.best_val_f1) + "\t" +
                 format_f1(cell.result.test_f1) + "\n";
      else
        curve += "-\t-\n";
    }
    write_file(out + "/curve.tsv", curve);
    manifest.artifacts.push_back("curve.tsv");
  }
  for (const GridCellResult& cell : cells)
    manifest.artifacts.push_back(cell_name(cell.index) + "/result.json");

  std::size_t failed = 0;
  for (const GridCellResult& cell : cells)
    if (!cell.ok) ++failed;
  manifest.report["cells"] = cells.size();
  manifest.report["failed"] = failed;
  if (!order.empty() && cells[order[0]].ok) {
    const GridCellResult& best = cells[order[0]];
    manifest.report["best_cell"] = best.index;
    manifest.report["best_val_f1"] = best.result.best_val_f1;
    manifest.report["best_test_f1"] = best.result.test_f1;
    manifest.report["best_config"] = train_config_json(best.config);
    if (options.sweep_layer)
      manifest.report["best_layer"] = best.config.align_layer;
  }
  write_manifest(out, manifest);
  return manifest;
}

RunManifest cmd_explain(const ExplainOptions& options) {
  if (options.run_dir.empty()) throw ConfigError("explain needs a run directory");
  TrainOptions topts;
  const ModelBundle bundle = restore_bundle(options.run_dir, &topts);

  ExplainOptions resolved = options;
  const bool inline_input =
      !options.roman_text.empty() || !options.deva_text.empty();
  if (inline_input == (options.index >= 0))
    throw ConfigError(
        "pass exactly one sentence source: --index or --roman with --deva");

  ScriptPairExample example;
  if (inline_input) {
    if (options.roman_text.empty() || options.deva_text.empty())
      throw ConfigError("inline sentences need both --roman and --deva");
    example.roman_words = split_words(options.roman_text);
    example.deva_words = split_words(options.deva_text);
  } else {
    if (resolved.data_dir.empty()) resolved.data_dir = topts.data_dir;
    const Dataset data = load_dataset(resolved.data_dir);
    if (options.index >= static_cast<int>(data.test.size()))
      throw DataError("test split has " + std::to_string(data.test.size()) +
                      " sentences, index " + std::to_string(options.index) +
                      " out of range");
    example = data.test[static_cast<std::size_t>(options.index)];
  }

  const int n = static_cast<int>(example.roman_words.size());
  if (!options.sampled && n > 12)
    throw ConfigError("sentence has " + std::to_string(n) +
                      " words; exact mode enumerates coalitions for at most "
                      "12, pass --sampled");
  const PlotFormat fmt = parse_plot_format(options.format);

  if (resolved.explained_class < 0)
    resolved.explained_class = predict(bundle, {example}, topts.config)[0];
  if (resolved.out_dir.empty())
    resolved.out_dir = options.run_dir + "/explain";

  auto attribute = [&](const ModelBundle& mb, const TrainConfig& config) {
    return options.sampled
               ? shapley_sampled(mb, example, config, resolved.explained_class,
                                 options.num_permutations, options.seed)
               : shapley_exact(mb, example, config, resolved.explained_class);
  };

  const Attribution attr = attribute(bundle, topts.config);
  std::vector<std::pair<std::string, Attribution>> sections;
  sections.emplace_back(model_label(topts.config.ablation), attr);

  Attribution baseline_attr;
  if (!options.compare_baseline.empty()) {
    TrainOptions bopts;
    const ModelBundle baseline = restore_bundle(options.compare_baseline, &bopts);
    baseline_attr = attribute(baseline, bopts.config);
    sections.emplace_back(model_label(bopts.config.ablation), baseline_attr);
  }

  std::string plot;
  if (fmt == PlotFormat::ansi) {
    for (const auto& [label, a] : sections)
      plot += label + ": " + render_text_plot(a, fmt);
  } else {
    plot +=
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        "<title>attribution</title></head><body>\n";
    for (const auto& [label, a] : sections)
      plot += "<p>" + label + "</p>\n" + render_text_plot(a, fmt);
    plot += "</body></html>\n";
  }

  ensure_dir(resolved.out_dir);
  write_file(resolved.out_dir + "/attribution.json", attribution_json(attr));
  const std::string plot_file =
      fmt == PlotFormat::ansi ? "plot.txt" : "plot.html";
  write_file(resolved.out_dir + "/" + plot_file, plot);

  RunManifest manifest;
  manifest.command = "explain";
  manifest.config = resolved.to_json();
  manifest.seed = options.seed;
  manifest.artifacts = {"attribution.json", plot_file};
  if (!options.compare_baseline.empty()) {
    write_file(resolved.out_dir + "/baseline_attribution.json",
               attribution_json(baseline_attr));
    manifest.artifacts.push_back("baseline_attribution.json");
  }
  manifest.report["explained_class"] = resolved.explained_class;
  manifest.report["mode"] = attr.mode;
  manifest.report["words"] = n;
  write_manifest(resolved.out_dir, manifest);
  return manifest;
}

}  // namespace xscript
