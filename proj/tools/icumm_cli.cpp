// icumm: train, evaluate and inspect the multimodal ICU models.
//
// Exit codes: 0 ok, 1 usage or validation error, 2 runtime failure,
// 3 selfcheck failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "icumm/checkpoint.hpp"
#include "icumm/config.hpp"
#include "icumm/errors.hpp"
#include "icumm/ingestion.hpp"
#include "icumm/selfcheck.hpp"
#include "icumm/synthetic.hpp"
#include "icumm/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace icumm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelfcheck = 3;

/// Usage problem detected after parsing (missing required setting).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string data;
  std::string task;
  std::string variant;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool model_flags) {
  cmd->add_option("--config", o.config_file, "Config file with [section] key = value lines");
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set model.hidden=64");
  cmd->add_option("--data", o.data, "Dataset root (holds manifest.json)");
  if (model_flags) {
    cmd->add_option("--task", o.task, "ihm, decomp or los");
    cmd->add_option("--variant", o.variant, "baseline, multimodal_cnn, multimodal_avgwe or text_only");
  }
}

CliConfig build_config(const CommonOptions& o) {
  CliConfig cfg;
  if (!o.config_file.empty()) load_config_file(o.config_file, cfg);
  for (const auto& s : o.overrides) cfg.apply_override(s);
  if (!o.data.empty()) cfg.data_root = o.data;
  if (!o.task.empty()) cfg.task = parse_task(o.task);
  if (!o.variant.empty()) cfg.variant = parse_variant(o.variant);
  cfg.train.validate();
  return cfg;
}

Dataset load(const CliConfig& cfg, Task task) {
  if (cfg.data_root.empty()) throw UsageError("missing --data (or data.root in the config)");
  ReadOptions ro;
  ro.max_note_tokens = cfg.max_note_tokens;
  Dataset ds = load_dataset(cfg.data_root, task, ro);
  constexpr std::size_t kShown = 5;
  for (std::size_t k = 0; k < std::min(kShown, ds.warnings.size()); ++k) log_line("warning: " + ds.warnings[k]);
  if (ds.warnings.size() > kShown) log_line("(" + std::to_string(ds.warnings.size() - kShown) + " more warnings)");
  std::map<std::string, std::size_t> reasons;
  for (const auto& x : ds.excluded) ++reasons[x.reason];
  for (const auto& [reason, n] : reasons) log_line("excluded " + std::to_string(n) + ": " + reason);
  log_line(std::string(to_string(task)) + ": " + std::to_string(ds.train.size()) + " train, " +
           std::to_string(ds.val.size()) + " val, " + std::to_string(ds.test.size()) + " test, " +
           std::to_string(ds.excluded.size()) + " excluded");
  return ds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_train(const CommonOptions& o, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  CliConfig cfg = build_config(o);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (!cfg.task) throw UsageError("missing --task");
  if (!cfg.variant) throw UsageError("missing --variant");
  if (cfg.output_dir.empty()) throw UsageError("missing --out");
  if (cfg.data_root.empty()) throw UsageError("missing --data (or data.root in the config)");
  const std::uint64_t run_seed = seed ? *seed : cfg.train.seeds.front();

  const Dataset ds = load(cfg, *cfg.task);
  if (ds.train.empty()) throw ValidationError("no usable training episodes");
  ModelConfig mcfg = ModelConfig::defaults(*cfg.task, *cfg.variant, ds.manifest.feature_names.size(), ds.table.dim());
  cfg.model.apply(mcfg);
  mcfg.validate();

  auto result = train(mcfg, ds.train, ds.val, ds.table, cfg.train, run_seed, log_line);
  if (!ds.test.empty()) result.record.test_metrics = evaluate(result.model, ds.test, ds.table, *cfg.task);
  fs::create_directories(cfg.output_dir);
  save_checkpoint(cfg.output_dir / "checkpoint.bin", result.model);
  const std::string record = result.record.to_json();
  write_text(cfg.output_dir / "run.json", record + "\n");
  std::cout << record << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint, const std::string& split_name) {
  const CliConfig cfg = build_config(o);
  if (checkpoint.empty()) throw UsageError("missing --checkpoint");
  const Split split = parse_split(split_name);
  const Model model = load_checkpoint(fs::path(checkpoint));
  const Task task = cfg.task.value_or(model.config().task);
  if (task != model.config().task) {
    throw ValidationError("checkpoint holds a " + std::string(to_string(model.config().task)) + " model, not " +
                          std::string(to_string(task)));
  }
  if (cfg.variant && *cfg.variant != model.config().variant) {
    throw ValidationError("checkpoint holds a " + std::string(to_string(model.config().variant)) + " model");
  }
  const Dataset ds = load(cfg, task);
  json j;
  j["task"] = std::string(to_string(task));
  j["variant"] = std::string(to_string(model.config().variant));
  j["split"] = std::string(to_string(split));
  j["metrics"] = evaluate(model, ds.split(split), ds.table, task);
  std::cout << j.dump() << '\n';
  return kExitOk;
}

struct SynthOptions {
  std::string out;
  std::size_t patients = 100;
  std::uint64_t seed = 1;
  std::string signal = "mixed";
  std::size_t features = 8;
  std::size_t embed_dim = 16;
  double missing_rate = 0.1;
  bool force = false;
};

int cmd_synth(const SynthOptions& o) {
  SyntheticConfig sc;
  sc.patients = o.patients;
  sc.seed = o.seed;
  sc.signal = parse_signal_plan(o.signal);
  sc.feature_dim = o.features;
  sc.embed_dim = o.embed_dim;
  sc.missing_rate = o.missing_rate;
  sc.validate();
  const fs::path root(o.out);
  if (fs::exists(root) && !(fs::is_directory(root) && fs::is_empty(root))) {
    if (!o.force) throw ValidationError(root.string() + " exists and is not empty (use --force to replace it)");
    fs::remove_all(root);
  }
  const auto data = generate_synthetic(sc);
  write_dataset(root, data);
  json j;
  j["root"] = root.string();
  j["patients"] = data.episodes.size();
  j["signal"] = data.manifest.signal;
  j["seed"] = data.manifest.seed;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_selfcheck(bool quick, std::uint64_t seed) {
  const auto results = run_selfcheck({quick, seed});
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    std::printf("%s  %-40s %.3e < %.0e%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value, r.threshold,
                r.detail.empty() ? "" : "  ", r.detail.c_str());
  }
  std::printf("%s\n", ok ? "selfcheck passed" : "selfcheck FAILED");
  return ok ? kExitOk : kExitSelfcheck;
}

int cmd_experiment(const CommonOptions& o, const std::string& out_dir) {
  CliConfig cfg = build_config(o);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (cfg.data_root.empty()) throw UsageError("missing --data (or data.root in the config)");
  ExperimentSpec spec;
  spec.tasks = cfg.experiment_tasks;
  spec.variants = cfg.experiment_variants;
  spec.train = cfg.train;
  spec.overrides = cfg.model;

  std::map<Task, Dataset> loaded;
  std::map<Task, const Dataset*> ptrs;
  for (Task t : spec.tasks) ptrs[t] = &(loaded[t] = load(cfg, t));
  const auto table = run_experiment(ptrs, spec, log_line);
  std::cerr << table.to_text();
  std::cout << table.to_json_lines();
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "table.txt", table.to_text());
    write_text(cfg.output_dir / "metrics.jsonl", table.to_json_lines());
    json runs = json::array();
    for (const auto& row : table.rows) {
      for (const auto& r : row.runs) runs.push_back(json::parse(r.to_json()));
    }
    write_text(cfg.output_dir / "runs.json", runs.dump(1) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal ICU prediction: series LSTM + clinical-note CNN"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::string train_out;
  std::optional<std::uint64_t> train_seed;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write checkpoint.bin and run.json");
  add_common(train_cmd, train_opts, true);
  train_cmd->add_option("--out", train_out, "Run directory");
  train_cmd->add_option("--seed", train_seed, "Seed (default: first of train.seeds)");

  CommonOptions eval_opts;
  std::string checkpoint, split = "test";
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on one split; prints metrics JSON");
  add_common(eval_cmd, eval_opts, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file");
  eval_cmd->add_option("--split", split, "train, val or test")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--patients", synth.patients, "Number of patients")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--signal", synth.signal, "mixed, notes-only or series-heavy")->capture_default_str();
  synth_cmd->add_option("--features", synth.features, "Time-series features")->capture_default_str();
  synth_cmd->add_option("--embed-dim", synth.embed_dim, "Embedding dimension")->capture_default_str();
  synth_cmd->add_option("--missing-rate", synth.missing_rate, "Fraction of missing cells")->capture_default_str();
  synth_cmd->add_flag("--force", synth.force, "Replace a non-empty output directory");

  bool quick = false;
  std::uint64_t check_seed = 7;
  auto* check_cmd = app.add_subcommand("selfcheck", "Gradient checks and metric oracles");
  check_cmd->add_flag("--quick", quick, "Fewer metric instances");
  check_cmd->add_option("--seed", check_seed, "Seed")->capture_default_str();

  CommonOptions exp_opts;
  std::string exp_out;
  auto* exp_cmd = app.add_subcommand("experiment", "Train every (task, variant, seed) and print the comparison table");
  add_common(exp_cmd, exp_opts, false);
  exp_cmd->add_option("--out", exp_out, "Directory for table.txt, metrics.jsonl and runs.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, train_out, train_seed);
    if (*eval_cmd) return cmd_evaluate(eval_opts, checkpoint, split);
    if (*synth_cmd) return cmd_synth(synth);
    if (*check_cmd) return cmd_selfcheck(quick, check_seed);
    if (*exp_cmd) return cmd_experiment(exp_opts, exp_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
