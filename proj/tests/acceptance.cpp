// Acceptance gate: one PASS/FAIL line per criterion, exit 0 only if all
// pass. Each criterion is independent; a failure never stops the others.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support/lp_oracle.hpp"
#include "support/model_fd.hpp"
#include "xscript/commands.hpp"
#include "xscript/errors.hpp"
#include "xscript/explain.hpp"
#include "xscript/metrics.hpp"
#include "xscript/synthetic.hpp"
#include "xscript/text.hpp"
#include "xscript/trainer.hpp"
#include "xscript/transport.hpp"

using namespace xscript;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string ws;  // scratch workspace, wiped at startup

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw DataError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared fixtures

// Small disk corpus for the command-level criteria (7, 8, 9).
const std::string& small_corpus() {
  static const std::string dir = [] {
    GenSyntheticOptions g;
    g.out_dir = ws + "/small_corpus";
    g.spec = {300, 60, 60, 11, CuePlacement::deva_advantaged, 4, 9};
    cmd_gen_synthetic(g);
    return g.out_dir;
  }();
  return dir;
}

// One full-model training run and its anchor-free twin, same seed and data,
// differing only in the reference weight. Built once, used by criteria 7-8.
struct SmallWorld {
  Dataset data;
  TrainConfig config;                      // the gamma = 0.7 variant
  ModelBundle anchored;                    // trained with gamma = 0.7
  ModelBundle anchor_free;                 // trained with gamma = 0
  RunResult anchored_result;
  std::map<std::string, std::vector<double>> deva_at_init;  // suffix -> data
};

const SmallWorld& small_world() {
  static const SmallWorld w = [] {
    SmallWorld w;
    w.data = load_dataset(small_corpus());

    EncoderConfig arch;
    arch.num_layers = 2;
    arch.num_heads = 2;
    arch.d_model = 16;
    arch.d_ff = 32;
    arch.max_len = 12;
    FusionConfig fusion;
    fusion.num_heads = 2;
    fusion.d_model = 16;

    w.config.alpha = 1.0;
    w.config.beta = 0.05;
    w.config.gamma = 0.7;
    w.config.align_layer = 2;
    w.config.learning_rate = 1e-3;
    w.config.batch_size = 32;
    w.config.max_len = 12;
    w.config.max_epochs = 10;
    w.config.patience = 10;
    w.config.seed = 5;

    w.anchored = ModelBundle::init(w.data.train, arch, fusion, 5);
    for (const auto& [name, t] : w.anchored.named_params())
      if (name.rfind("deva.", 0) == 0) w.deva_at_init[name.substr(5)] = t.data();
    w.anchored_result = train_loop(w.anchored, w.data, w.config);

    TrainConfig no_anchor = w.config;
    no_anchor.gamma = 0.0;
    w.anchor_free = ModelBundle::init(w.data.train, arch, fusion, 5);
    train_loop(w.anchor_free, w.data, no_anchor);
    return w;
  }();
  return w;
}

// ---------------------------------------------------------------------------
// 1. Scale disclosure

Outcome scale_disclosure() {
  const std::string readme = std::string(XSCRIPT_REPO_DIR) + "/README.md";
  const std::string marker = "properties and orderings, not absolute scores";
  std::string text;
  try {
    text = slurp(readme);
  } catch (const DataError&) {
    return {false, "README.md is missing; the scope disclosure lives there"};
  }
  if (text.find(marker) == std::string::npos)
    return {false, "README.md does not carry the scope disclosure \"" +
                       marker + "\""};
  return {true,
          "desk-scale runs cannot reproduce full-scale absolute F1; this "
          "suite substitutes the property and ordering checks below "
          "(disclosed in README.md)"};
}

// ---------------------------------------------------------------------------
// 2. Ablation ordering

Outcome ablation_ordering() {
  const auto t0 = std::chrono::steady_clock::now();

  GenSyntheticOptions g;
  g.out_dir = ws + "/ablation/corpus";
  g.spec = {1000, 200, 300, 42, CuePlacement::deva_advantaged, 4, 9};
  cmd_gen_synthetic(g);

  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::map<std::string, double> mean_f1;
  for (const char* abl :
       {"none", "no-reg", "no-align", "baseline-roman", "baseline-deva"}) {
    double sum = 0.0;
    for (std::uint64_t seed : seeds) {
      TrainOptions t;
      t.data_dir = g.out_dir;
      t.out_dir = ws + "/ablation/" + abl + "_s" + std::to_string(seed);
      t.num_layers = 2;
      t.num_heads = 4;
      t.d_model = 32;
      t.d_ff = 64;
      t.config.alpha = 1.0;
      t.config.beta = 0.05;
      t.config.gamma = 0.7;
      t.config.align_layer = 2;
      t.config.learning_rate = 1e-3;
      t.config.batch_size = 32;
      t.config.max_len = 12;
      t.config.max_epochs = 25;
      t.config.patience = 8;
      t.config.seed = seed;
      t.config.ablation = parse_ablation(abl);
      const RunManifest m = cmd_train(t);
      sum += double(m.report.at("test_f1"));
    }
    mean_f1[abl] = sum / static_cast<double>(seeds.size());
  }

  const double proposed = mean_f1["none"];
  const double no_reg = mean_f1["no-reg"];
  const double no_align = mean_f1["no-align"];
  const double best_baseline =
      std::max(mean_f1["baseline-roman"], mean_f1["baseline-deva"]);
  const double gap = proposed - best_baseline;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::string chain = "proposed " + fmt("%.4f", proposed) + ", no-reg " +
                      fmt("%.4f", no_reg) + ", no-align " +
                      fmt("%.4f", no_align) + ", best baseline " +
                      fmt("%.4f", best_baseline) + ", gap " +
                      fmt("%.1f", gap * 100.0) + " F1 points, 3 seeds, " +
                      fmt("%.0f", secs) + "s";
  if (!(proposed >= no_reg && no_reg >= no_align && no_align >= best_baseline))
    return {false, "mean ordering violated: " + chain};
  if (!(gap >= 0.03))
    return {false, "margin over baselines below 3 F1 points: " + chain};
  if (secs >= 1800.0) return {false, "over the 30-minute budget: " + chain};
  return {true, chain};
}

// ---------------------------------------------------------------------------
// 3. Transport exactness

Outcome transport_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(331);
  std::uniform_real_distribution<double> cost_dist(0.0, 1.0);
  std::uniform_real_distribution<double> mass(0.2, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 4);
    Matrix cost(m, n);
    for (double& c : cost.v) c = cost_dist(rng);
    std::vector<double> supply(m), demand(n);
    for (double& s : supply) s = mass(rng);
    for (double& d : demand) d = mass(rng);
    if (trial % 2 == 0) {  // balanced variant
      double ts = 0.0, td = 0.0;
      for (double s : supply) ts += s;
      for (double d : demand) td += d;
      for (double& d : demand) d *= ts / td;
    }
    TransportPlan plan = solve_transport(cost, supply, demand);
    try {
      validate_plan(cost, supply, demand, plan, 1e-9);
    } catch (const NumericError& e) {
      return {false, "instance " + std::to_string(trial) +
                         " violates constraints: " + e.what()};
    }
    const auto oracle = testsupport::lp_oracle_solve(cost, supply, demand);
    if (!oracle.feasible)
      return {false, "oracle infeasible on instance " + std::to_string(trial)};
    if (std::abs(plan.objective - oracle.objective) > 1e-9)
      return {false, "objective mismatch on instance " + std::to_string(trial) +
                         ": solver " + fmt("%.12f", plan.objective) +
                         " vs oracle " + fmt("%.12f", oracle.objective)};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (secs >= 10.0) return {false, "over the 10-second budget"};
  return {true, "200/200 objectives match the tree-enumeration oracle within "
                "1e-9 and every plan satisfies the constraints, " +
                    fmt("%.2f", secs) + "s"};
}

// ---------------------------------------------------------------------------
// 4. EMD identity and symmetry

PointCloud random_cloud(std::mt19937_64& rng, int count, int dim) {
  std::normal_distribution<double> coord(0.0, 1.0);
  std::vector<double> pts(static_cast<std::size_t>(count) * dim);
  for (double& v : pts) v = coord(rng);
  return PointCloud::uniform(count, dim, std::move(pts));
}

Outcome emd_identity_symmetry() {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 6);
    const int dim = 1 + static_cast<int>(rng() % 4);
    PointCloud p = random_cloud(rng, count, dim);
    const double self = emd(p, p);
    if (self != 0.0)
      return {false, "EMD(P, P) = " + fmt("%.3e", self) +
                         " on identity instance " + std::to_string(trial)};
  }
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 3);
    PointCloud p = random_cloud(rng, 1 + static_cast<int>(rng() % 5), dim);
    PointCloud q = random_cloud(rng, 1 + static_cast<int>(rng() % 5), dim);
    worst = std::max(worst, std::abs(emd(p, q) - emd(q, p)));
  }
  if (worst > 1e-9)
    return {false, "max symmetry violation " + fmt("%.3e", worst)};
  return {true, "EMD(P, P) = 0 exactly on 100 clouds; max |EMD(P, Q) - "
                "EMD(Q, P)| = " +
                    fmt("%.1e", worst) + " over 100 equal-mass pairs"};
}

// ---------------------------------------------------------------------------
// 5. End-to-end gradient check

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const testsupport::ModelFdOutcome out = testsupport::combined_loss_fd_check(11);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!out.sampled)
    return {false, "no non-degenerate transport instance found in " +
                       std::to_string(out.attempts) + " draws"};
  if (out.check.max_rel_error > 1e-3)
    return {false, "max relative error " + fmt("%.3e", out.check.max_rel_error) +
                       " at " + out.check.worst + " over " +
                       std::to_string(out.check.checked) + " parameters"};
  if (secs >= 60.0) return {false, "over the 60-second budget"};
  return {true, "all " + std::to_string(out.check.checked) +
                    " parameters within 1e-3 of central differences (worst " +
                    fmt("%.1e", out.check.max_rel_error) + "), " +
                    std::to_string(out.attempts) +
                    " draw(s) after degenerate-basis screening, " +
                    fmt("%.1f", secs) + "s"};
}

// ---------------------------------------------------------------------------
// 6. Composite-loss arithmetic

Outcome composite_arithmetic() {
  TrainConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 0.7;
  cfg.gamma = 0.7;
  const double headline = combined_loss_value(1.0, 2.0, 3.0, cfg);
  if (headline != 4.5)
    return {false, "combined(1, 2, 3) = " + fmt("%.17g", headline) +
                       ", expected 4.5 exactly"};

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double ce = u(rng), sa = u(rng), reg = u(rng);
    TrainConfig a0 = cfg;
    a0.alpha = 0.0;
    if (combined_loss_value(ce, sa, reg, a0) != ce)
      return {false, "alpha = 0 does not reduce to the task loss"};
    TrainConfig g0 = cfg;
    g0.gamma = 0.0;
    const double expected = ce + g0.alpha * (g0.beta * sa);
    if (combined_loss_value(ce, sa, reg, g0) != expected)
      return {false, "gamma = 0 does not reduce to task + weighted alignment"};
  }
  return {true, "combined(1, 2, 3) = 4.5 exactly; alpha = 0 returns the task "
                "loss and gamma = 0 drops the reference term bit-exactly on "
                "50 random triples"};
}

// ---------------------------------------------------------------------------
// 7. Anchor regularization

Outcome anchor_regularization() {
  const SmallWorld& w = small_world();

  // The frozen reference must be byte-identical to the Devanagari encoder as
  // it stood before epoch 1, after a full training run.
  for (const auto& [name, t] : w.anchored.named_params()) {
    if (name.rfind("frozen.", 0) != 0) continue;
    const auto it = w.deva_at_init.find(name.substr(7));
    if (it == w.deva_at_init.end())
      return {false, "snapshot parameter " + name + " has no live twin"};
    const std::vector<double>& now = const_cast<Tensor&>(t).mutable_data();
    if (now.size() != it->second.size() ||
        std::memcmp(now.data(), it->second.data(),
                    now.size() * sizeof(double)) != 0)
      return {false, "snapshot parameter " + name + " changed during training"};
  }

  const double drift_anchored =
      snapshot_divergence(w.anchored, w.data.test, w.config.align_layer, w.config);
  TrainConfig free_cfg = w.config;
  free_cfg.gamma = 0.0;
  const double drift_free = snapshot_divergence(w.anchor_free, w.data.test,
                                                free_cfg.align_layer, free_cfg);
  if (!(drift_anchored < drift_free))
    return {false, "reference drift with the anchor (" +
                       fmt("%.6f", drift_anchored) +
                       ") is not below the anchor-free drift (" +
                       fmt("%.6f", drift_free) + ")"};
  return {true, "snapshot bit-identical after training; final reference drift " +
                    fmt("%.4f", drift_anchored) + " with the anchor vs " +
                    fmt("%.4f", drift_free) + " without, same seed and data"};
}

// ---------------------------------------------------------------------------
// 8. Shapley axioms

Outcome shapley_axioms() {
  const SmallWorld& w = small_world();

  // Dummy and symmetry on games with closed-form values.
  {
    const std::vector<std::string> words = {"w0", "w1", "w2", "w3"};
    const ValueFunction additive = [](const std::vector<bool>& keep) {
      return (keep[0] ? 0.4 : 0.0) + (keep[2] ? 0.25 : 0.0);
    };
    const Attribution a = shapley_exact(words, additive, 0);
    if (a.values[1] != 0.0 || a.values[3] != 0.0)
      return {false, "dummy words received nonzero attribution"};

    const ValueFunction unanimity = [](const std::vector<bool>& keep) {
      return keep[1] && keep[3] ? 1.0 : 0.0;
    };
    const Attribution u = shapley_exact(words, unanimity, 0);
    if (u.values[1] != u.values[3])
      return {false, "symmetric words received different attributions"};
  }

  // Efficiency on the live model, then sampled-mode agreement.
  const ScriptPairExample* example = nullptr;
  for (const auto& ex : w.data.test)
    if (ex.roman_words.size() >= 4 && ex.roman_words.size() <= 6) {
      example = &ex;
      break;
    }
  if (example == nullptr) return {false, "no 4-6 word test sentence found"};

  const ValueFunction v = model_value_function(w.anchored, *example, w.config, 2);
  const Attribution exact = shapley_exact(example->roman_words, v, 2);
  const int n = static_cast<int>(exact.values.size());
  double total = 0.0;
  for (double x : exact.values) total += x;
  const double span =
      v(std::vector<bool>(n, true)) - v(std::vector<bool>(n, false));
  if (std::abs(total - span) > 1e-9)
    return {false, "efficiency residual " + fmt("%.3e", std::abs(total - span))};

  const Attribution sampled =
      shapley_sampled(example->roman_words, v, 2, 10000, 17);
  for (int i = 0; i < n; ++i) {
    const double err = std::abs(sampled.values[i] - exact.values[i]);
    if (sampled.stderrs[i] == 0.0) {
      if (err != 0.0)
        return {false, "word " + std::to_string(i) +
                           " has zero reported error but a nonzero gap"};
    } else if (err > 3.0 * sampled.stderrs[i]) {
      return {false, "word " + std::to_string(i) + " off by " +
                         fmt("%.3e", err) + " vs standard error " +
                         fmt("%.3e", sampled.stderrs[i])};
    }
  }
  return {true, "dummy 0 and symmetry bit-exact on closed-form games; model "
                "efficiency residual below 1e-9 on a " +
                    std::to_string(n) +
                    "-word sentence; 10,000-permutation sampling within 3 "
                    "standard errors of exact for every word"};
}

// ---------------------------------------------------------------------------
// 9. Layer sweep

Outcome layer_sweep() {
  GridOptions o;
  o.base.data_dir = small_corpus();
  o.base.out_dir = ws + "/sweep";
  o.base.num_layers = 3;
  o.base.num_heads = 2;
  o.base.d_model = 16;
  o.base.d_ff = 32;
  o.base.config.alpha = 1.0;
  o.base.config.beta = 0.05;
  o.base.config.gamma = 0.7;
  o.base.config.align_layer = 1;
  o.base.config.learning_rate = 2e-3;
  o.base.config.batch_size = 32;
  o.base.config.max_len = 12;
  o.base.config.max_epochs = 4;
  o.base.config.patience = 4;
  o.base.config.seed = 3;
  o.sweep_layer = true;
  const RunManifest manifest = cmd_grid(o);

  if (int(manifest.report.at("cells")) != 3 ||
      int(manifest.report.at("failed")) != 0)
    return {false, "expected 3 clean cells, got " +
                       manifest.report.at("cells").dump() + " with " +
                       manifest.report.at("failed").dump() + " failure(s)"};

  const std::string curve = slurp(o.base.out_dir + "/curve.tsv");
  std::vector<std::array<double, 2>> rows;  // val_f1, test_f1 per layer
  {
    std::istringstream in(curve);
    std::string line;
    std::getline(in, line);  // header
    int layer = 0;
    while (std::getline(in, line)) {
      ++layer;
      double expect_layer = 0.0, val = 0.0, test = 0.0;
      if (std::sscanf(line.c_str(), "%lf\t%lf\t%lf", &expect_layer, &val,
                      &test) != 3 ||
          static_cast<int>(expect_layer) != layer)
        return {false, "curve row " + std::to_string(layer) +
                           " malformed: \"" + line + "\""};
      rows.push_back({val, test});
    }
  }
  if (rows.size() != 3)
    return {false, "curve has " + std::to_string(rows.size()) +
                       " entries for a 3-layer encoder"};

  int argmax = 1;
  for (int layer = 2; layer <= 3; ++layer)
    if (rows[layer - 1][0] > rows[argmax - 1][0]) argmax = layer;
  const int best = manifest.report.at("best_layer");
  if (best != argmax)
    return {false, "summary best layer " + std::to_string(best) +
                       " is not the curve argmax " + std::to_string(argmax)};
  return {true, "one run per layer, 3-entry curve, summary best layer " +
                    std::to_string(best) + " = curve argmax (val F1 " +
                    fmt("%.4f", rows[best - 1][0]) + ")"};
}

// ---------------------------------------------------------------------------
// 10. Manifest determinism

bool tree_equal(const std::string& a, const std::string& b,
                std::string& reason) {
  std::vector<std::string> ra, rb;
  for (const auto& entry : fs::recursive_directory_iterator(a))
    if (entry.is_regular_file())
      ra.push_back(fs::relative(entry.path(), a).string());
  for (const auto& entry : fs::recursive_directory_iterator(b))
    if (entry.is_regular_file())
      rb.push_back(fs::relative(entry.path(), b).string());
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  if (ra != rb) {
    reason = "file lists differ between " + a + " and " + b;
    return false;
  }
  for (const std::string& rel : ra)
    if (slurp(a + "/" + rel) != slurp(b + "/" + rel)) {
      reason = rel + " differs between the original and the replay";
      return false;
    }
  return true;
}

// Renames `dir` aside, re-runs its manifest (whose config still points the
// command at `dir`), and compares the two trees byte for byte.
std::string replay_in_place(const std::string& dir) {
  const std::string orig = dir + ".orig";
  fs::rename(dir, orig);
  const ordered_json manifest = ordered_json::parse(slurp(orig + "/manifest.json"));
  const std::string command = manifest.at("command");
  const ordered_json& config = manifest.at("config");
  if (command == "gen-synthetic")
    cmd_gen_synthetic(GenSyntheticOptions::from_json(config));
  else if (command == "train")
    cmd_train(TrainOptions::from_json(config));
  else if (command == "eval")
    cmd_eval(EvalOptions::from_json(config));
  else if (command == "grid")
    cmd_grid(GridOptions::from_json(config));
  else if (command == "explain")
    cmd_explain(ExplainOptions::from_json(config));
  else
    return "unknown command \"" + command + "\" in " + orig;
  std::string reason;
  if (!tree_equal(dir, orig, reason)) return reason;
  return "";
}

Outcome manifest_determinism() {
  const std::string root = ws + "/replay";

  GenSyntheticOptions g;
  g.out_dir = root + "/corpus";
  g.spec = {120, 30, 30, 7, CuePlacement::mixed, 4, 9};
  cmd_gen_synthetic(g);

  TrainOptions t;
  t.data_dir = g.out_dir;
  t.out_dir = root + "/run";
  t.num_layers = 2;
  t.num_heads = 2;
  t.d_model = 16;
  t.d_ff = 32;
  t.config.align_layer = 1;
  t.config.learning_rate = 2e-3;
  t.config.batch_size = 16;
  t.config.max_len = 12;
  t.config.max_epochs = 2;
  t.config.patience = 2;
  t.config.seed = 3;
  cmd_train(t);

  EvalOptions e;
  e.run_dir = t.out_dir;
  e.out_dir = root + "/eval";
  cmd_eval(e);

  ExplainOptions x;
  x.run_dir = t.out_dir;
  x.index = 0;
  x.out_dir = root + "/explain";
  cmd_explain(x);

  int replayed = 0;
  for (const char* dir : {"/corpus", "/run", "/eval", "/explain"}) {
    const std::string reason = replay_in_place(root + dir);
    if (!reason.empty()) return {false, reason};
    ++replayed;
  }
  // The layer sweep of criterion 9, replayed cell by cell from its manifest.
  const std::string reason = replay_in_place(ws + "/sweep");
  if (!reason.empty()) return {false, reason};
  ++replayed;
  return {true, std::to_string(replayed) +
                    " command replays (corpus, train, eval, explain, grid "
                    "sweep) reproduced every output file byte-identically"};
}

}  // namespace

int main() {
  ws = (fs::temp_directory_path() / "xscript_acceptance").string();
  fs::remove_all(ws);
  fs::create_directories(ws);

  struct Row {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Row> rows = {
      {1, "scale-disclosure", scale_disclosure},
      {2, "ablation-ordering", ablation_ordering},
      {3, "transport-exactness", transport_exactness},
      {4, "emd-identity-symmetry", emd_identity_symmetry},
      {5, "gradient-check", gradient_check},
      {6, "composite-arithmetic", composite_arithmetic},
      {7, "anchor-regularization", anchor_regularization},
      {8, "shapley-axioms", shapley_axioms},
      {9, "layer-sweep", layer_sweep},
      {10, "manifest-determinism", manifest_determinism},
  };

  int failures = 0;
  for (const Row& row : rows) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = row.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("unhandled exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("%s %2d  %-22s %7.1fs  %s\n", outcome.pass ? "PASS" : "FAIL",
                row.id, row.name, secs, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  std::printf("%d/10 criteria passed\n",
              static_cast<int>(rows.size()) - failures);
  return failures == 0 ? 1 : 0;
}
