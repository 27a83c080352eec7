// Command-line entry point. Each subcommand resolves its options in three
// layers: struct defaults, then an optional --config JSON file (a bare
// options object or a prior run's manifest), then explicit flags, which win.
// Library errors map to exit codes: config/usage 1, data 2, shape/numeric 3.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "xscript/commands.hpp"
#include "xscript/errors.hpp"

namespace {

using namespace xscript;

std::string read_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

struct GenFlags {
  std::string config_file, out, cue_placement;
  int size = 0, validation_size = 0, test_size = 0, min_words = 0, max_words = 0;
  std::uint64_t seed = 0;
};

void add_gen(CLI::App& app) {
  auto* sub = app.add_subcommand("gen-synthetic",
                                 "generate a paired-script corpus");
  auto flags = std::make_shared<GenFlags>();
  sub->add_option("--config", flags->config_file, "options JSON or manifest");
  sub->add_option("--out", flags->out, "output directory");
  sub->add_option("--size", flags->size, "training split size");
  sub->add_option("--validation-size", flags->validation_size);
  sub->add_option("--test-size", flags->test_size);
  sub->add_option("--seed", flags->seed);
  sub->add_option("--cue-placement", flags->cue_placement,
                  "roman_only | deva_advantaged | mixed");
  sub->add_option("--min-words", flags->min_words);
  sub->add_option("--max-words", flags->max_words);
  sub->callback([sub, flags] {
    GenSyntheticOptions o;
    if (sub->count("--config"))
      o = GenSyntheticOptions::from_json(
          load_config_file(flags->config_file, "gen-synthetic"));
    if (sub->count("--out")) o.out_dir = flags->out;
    if (sub->count("--size")) o.spec.train_size = flags->size;
    if (sub->count("--validation-size"))
      o.spec.validation_size = flags->validation_size;
    if (sub->count("--test-size")) o.spec.test_size = flags->test_size;
    if (sub->count("--seed")) o.spec.seed = flags->seed;
    if (sub->count("--cue-placement"))
      o.spec.cue_placement = parse_cue_placement(flags->cue_placement);
    if (sub->count("--min-words")) o.spec.min_words = flags->min_words;
    if (sub->count("--max-words")) o.spec.max_words = flags->max_words;
    require(!o.out_dir.empty(), "gen-synthetic needs --out");
    const RunManifest m = cmd_gen_synthetic(o);
    std::cout << "wrote " << o.out_dir << " (train " << o.spec.train_size
              << ", oracle roman "
              << m.report["roman_oracle_accuracy"].get<double>() << " deva "
              << m.report["deva_oracle_accuracy"].get<double>() << ")\n";
  });
}

struct TrainFlags {
  std::string config_file, data, out, query_script, ablation, pooling;
  double alpha = 0, beta = 0, gamma = 0, learning_rate = 0;
  int align_layer = 0, batch_size = 0, max_len = 0, patience = 0, max_epochs = 0;
  int num_layers = 0, num_heads = 0, d_model = 0, d_ff = 0, min_frequency = 0;
  std::uint64_t seed = 0;
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--config", f.config_file, "options JSON or manifest");
  sub->add_option("--data", f.data, "dataset directory");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--alpha", f.alpha, "auxiliary bundle weight");
  sub->add_option("--beta", f.beta, "alignment weight");
  sub->add_option("--gamma", f.gamma, "reference weight");
  sub->add_option("--align-layer", f.align_layer, "1-based aligned layer");
  sub->add_option("--learning-rate", f.learning_rate);
  sub->add_option("--batch-size", f.batch_size);
  sub->add_option("--max-len", f.max_len);
  sub->add_option("--patience", f.patience);
  sub->add_option("--max-epochs", f.max_epochs);
  sub->add_option("--seed", f.seed);
  sub->add_option("--query-script", f.query_script, "roman | deva");
  sub->add_option("--ablation", f.ablation,
                  "none | no-reg | no-align | baseline-roman | baseline-deva");
  sub->add_option("--num-layers", f.num_layers);
  sub->add_option("--num-heads", f.num_heads);
  sub->add_option("--d-model", f.d_model);
  sub->add_option("--d-ff", f.d_ff);
  sub->add_option("--pooling", f.pooling, "mean | cls");
  sub->add_option("--min-frequency", f.min_frequency, "vocabulary count floor");
}

void merge_train_flags(const CLI::App* sub, const TrainFlags& f, TrainOptions& o) {
  if (sub->count("--data")) o.data_dir = f.data;
  if (sub->count("--out")) o.out_dir = f.out;
  if (sub->count("--alpha")) o.config.alpha = f.alpha;
  if (sub->count("--beta")) o.config.beta = f.beta;
  if (sub->count("--gamma")) o.config.gamma = f.gamma;
  if (sub->count("--align-layer")) o.config.align_layer = f.align_layer;
  if (sub->count("--learning-rate")) o.config.learning_rate = f.learning_rate;
  if (sub->count("--batch-size")) o.config.batch_size = f.batch_size;
  if (sub->count("--max-len")) o.config.max_len = f.max_len;
  if (sub->count("--patience")) o.config.patience = f.patience;
  if (sub->count("--max-epochs")) o.config.max_epochs = f.max_epochs;
  if (sub->count("--seed")) o.config.seed = f.seed;
  if (sub->count("--query-script"))
    o.config.query_script = parse_query_script(f.query_script);
  if (sub->count("--ablation")) o.config.ablation = parse_ablation(f.ablation);
  if (sub->count("--num-layers")) o.num_layers = f.num_layers;
  if (sub->count("--num-heads")) o.num_heads = f.num_heads;
  if (sub->count("--d-model")) o.d_model = f.d_model;
  if (sub->count("--d-ff")) o.d_ff = f.d_ff;
  if (sub->count("--pooling")) o.pooling = parse_pooling(f.pooling);
  if (sub->count("--min-frequency")) o.min_frequency = f.min_frequency;
}

void add_train(CLI::App& app) {
  auto* sub = app.add_subcommand("train", "train one model configuration");
  auto flags = std::make_shared<TrainFlags>();
  add_train_flags(sub, *flags);
  sub->callback([sub, flags] {
    TrainOptions o;
    if (sub->count("--config"))
      o = TrainOptions::from_json(load_config_file(flags->config_file, "train"));
    merge_train_flags(sub, *flags, o);
    require(!o.data_dir.empty(), "train needs --data");
    require(!o.out_dir.empty(), "train needs --out");
    const RunManifest m = cmd_train(o);
    std::cout << "best val F1 " << m.report["best_val_f1"].get<double>()
              << " (epoch " << m.report["best_epoch"].get<int>()
              << "), test F1 " << m.report["test_f1"].get<double>() << "\n"
              << "run written to " << o.out_dir << "\n";
  });
}

struct EvalFlags {
  std::string config_file, run, data, split, out;
};

void add_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("eval", "score a saved run on one split");
  auto flags = std::make_shared<EvalFlags>();
  sub->add_option("--config", flags->config_file, "options JSON or manifest");
  sub->add_option("--run", flags->run, "training run directory");
  sub->add_option("--data", flags->data, "dataset directory (default: the run's)");
  sub->add_option("--split", flags->split, "train | validation | test");
  sub->add_option("--out", flags->out, "output directory");
  sub->callback([sub, flags] {
    EvalOptions o;
    if (sub->count("--config"))
      o = EvalOptions::from_json(load_config_file(flags->config_file, "eval"));
    if (sub->count("--run")) o.run_dir = flags->run;
    if (sub->count("--data")) o.data_dir = flags->data;
    if (sub->count("--split")) o.split = flags->split;
    if (sub->count("--out")) o.out_dir = flags->out;
    require(!o.run_dir.empty(), "eval needs --run");
    const RunManifest m = cmd_eval(o);
    std::cout << o.split << " weighted F1 "
              << m.report["weighted_f1"].get<double>() << "\n";
  });
}

struct GridFlags {
  TrainFlags train;
  std::string grid_file;
  bool sweep_layer = false;
};

void add_grid(CLI::App& app) {
  auto* sub = app.add_subcommand("grid",
                                 "train every cell of a hyperparameter grid");
  auto flags = std::make_shared<GridFlags>();
  add_train_flags(sub, flags->train);
  sub->add_option("--grid-file", flags->grid_file,
                  "JSON with alphas, betas, gammas, layers");
  sub->add_flag("--sweep-layer", flags->sweep_layer,
                "one run per encoder layer, other axes fixed");
  sub->callback([sub, flags] {
    GridOptions o;
    if (sub->count("--config"))
      o = GridOptions::from_json(
          load_config_file(flags->train.config_file, "grid"));
    merge_train_flags(sub, flags->train, o.base);
    if (sub->count("--grid-file")) o.grid_file = flags->grid_file;
    if (sub->count("--sweep-layer")) o.sweep_layer = true;
    require(!o.base.data_dir.empty(), "grid needs --data");
    require(!o.base.out_dir.empty(), "grid needs --out");
    cmd_grid(o);
    std::cout << read_artifact(o.base.out_dir + "/summary.tsv");
  });
}

struct ExplainFlags {
  std::string config_file, run, data, roman, deva, format, out, compare_baseline;
  int index = -1, explained_class = -1, permutations = 0;
  bool sampled = false;
  std::uint64_t seed = 0;
};

void add_explain(CLI::App& app) {
  auto* sub = app.add_subcommand("explain",
                                 "per-word attribution for one sentence");
  auto flags = std::make_shared<ExplainFlags>();
  sub->add_option("--config", flags->config_file, "options JSON or manifest");
  sub->add_option("--run", flags->run, "training run directory");
  sub->add_option("--data", flags->data, "dataset directory (default: the run's)");
  sub->add_option("--index", flags->index, "test-split sentence index");
  sub->add_option("--roman", flags->roman, "inline roman sentence");
  sub->add_option("--deva", flags->deva, "inline devanagari sentence");
  sub->add_option("--class", flags->explained_class,
                  "class to explain (default: the prediction)");
  sub->add_flag("--sampled", flags->sampled, "Monte Carlo mode");
  sub->add_option("--permutations", flags->permutations);
  sub->add_option("--seed", flags->seed);
  sub->add_option("--format", flags->format, "ansi | html");
  sub->add_option("--out", flags->out, "output directory");
  sub->add_option("--compare-baseline", flags->compare_baseline,
                  "second run directory to render alongside");
  sub->callback([sub, flags] {
    ExplainOptions o;
    if (sub->count("--config"))
      o = ExplainOptions::from_json(
          load_config_file(flags->config_file, "explain"));
    if (sub->count("--run")) o.run_dir = flags->run;
    if (sub->count("--data")) o.data_dir = flags->data;
    if (sub->count("--index")) o.index = flags->index;
    if (sub->count("--roman")) o.roman_text = flags->roman;
    if (sub->count("--deva")) o.deva_text = flags->deva;
    if (sub->count("--class")) o.explained_class = flags->explained_class;
    if (sub->count("--sampled")) o.sampled = true;
    if (sub->count("--permutations")) o.num_permutations = flags->permutations;
    if (sub->count("--seed")) o.seed = flags->seed;
    if (sub->count("--format")) o.format = flags->format;
    if (sub->count("--out")) o.out_dir = flags->out;
    if (sub->count("--compare-baseline"))
      o.compare_baseline = flags->compare_baseline;
    require(!o.run_dir.empty(), "explain needs --run");
    const RunManifest m = cmd_explain(o);
    const std::string out_dir =
        m.config["out"].get<std::string>();
    if (m.config["format"] == "html")
      std::cout << "plot written to " << out_dir << "/plot.html\n";
    else
      std::cout << read_artifact(out_dir + "/plot.txt");
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-script encoder workbench"};
  app.require_subcommand(1);
  add_gen(app);
  add_train(app);
  add_eval(app);
  add_grid(app);
  add_explain(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  } catch (const xscript::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const xscript::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const xscript::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 3;
  } catch (const xscript::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
