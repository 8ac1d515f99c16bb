#include "icumm/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "icumm/errors.hpp"

namespace icumm {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (seeds.empty()) throw ValidationError("at least one seed is required");
  if (!(clip_norm >= 0.0)) throw ValidationError("clip norm must be non-negative");
}

std::string selection_metric(Task task) { return task == Task::los ? "kappa" : "aucpr"; }

void ModelOverrides::apply(ModelConfig& cfg) const {
  if (hidden) cfg.hidden = *hidden;
  if (filters) cfg.filters = *filters;
  if (widths) cfg.widths = *widths;
  if (decay_lambda) cfg.decay_lambda = *decay_lambda;
  if (dropout) cfg.dropout = *dropout;
  if (weight_decay) cfg.weight_decay = *weight_decay;
}

std::string RunRecord::to_json() const {
  json j;
  j["task"] = std::string(icumm::to_string(task));
  j["variant"] = std::string(icumm::to_string(variant));
  j["seed"] = seed;
  j["selection_metric"] = selection_metric;
  json eps = json::array();
  for (const auto& e : epochs) {
    json ej;
    ej["epoch"] = e.epoch;
    ej["train_loss"] = e.train_loss;
    ej["val_metric"] = e.val_metric ? json(*e.val_metric) : json(nullptr);
    eps.push_back(std::move(ej));
  }
  j["epochs"] = std::move(eps);
  j["selected_epoch"] = selected_epoch ? json(*selected_epoch) : json(nullptr);
  j["test_metrics"] = test_metrics;
  return j.dump(1);
}

PooledPredictions predict_pooled(const Model& model, const std::vector<Episode>& episodes,
                                 const EmbeddingTable& table) {
  const Task task = model.config().task;
  PooledPredictions out;
  out.task = task;
  double loss = 0.0;
  for (const auto& e : episodes) {
    const auto pred = model.predict(e, table);
    loss += compute_loss(pred, e.labels, task);
    if (task == Task::ihm) {
      out.scores.push_back(pred.probs[0][0]);
      out.labels.push_back(*e.labels.mortality);
      continue;
    }
    const auto& target = task == Task::decomp ? e.labels.decompensation : e.labels.los_bucket;
    for (std::size_t i = 0; i < pred.probs.size(); ++i) {
      out.labels.push_back(target[i]);
      if (task == Task::decomp) {
        out.scores.push_back(pred.probs[i][0]);
      } else {
        const auto& p = pred.probs[i];
        out.predicted.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
      }
    }
  }
  if (!episodes.empty()) out.mean_loss = loss / static_cast<double>(episodes.size());
  return out;
}

namespace {

std::map<std::string, double> score(const PooledPredictions& p) {
  std::map<std::string, double> m;
  if (p.labels.empty()) return m;
  if (p.task == Task::los) {
    try {
      m["kappa"] = linear_weighted_kappa(p.labels, p.predicted, kLosBuckets);
    } catch (const UndefinedMetricError&) {
    }
    return m;
  }
  const ScoredSet set{p.scores, p.labels};
  try {
    m["auroc"] = auroc(set);
  } catch (const UndefinedMetricError&) {
  }
  try {
    m["aucpr"] = aucpr(set);
  } catch (const UndefinedMetricError&) {
  }
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::map<std::string, double> evaluate(const Model& model, const std::vector<Episode>& episodes,
                                       const EmbeddingTable& table, Task task) {
  if (task != model.config().task) {
    throw ValidationError("model was trained for " + std::string(to_string(model.config().task)) +
                          ", not " + std::string(to_string(task)));
  }
  if (episodes.empty()) throw ValidationError("cannot evaluate on an empty split");
  return score(predict_pooled(model, episodes, table));
}

TrainResult train(const ModelConfig& cfg, const std::vector<Episode>& train_set, const std::vector<Episode>& val_set,
                  const EmbeddingTable& table, const TrainConfig& tcfg, std::uint64_t seed, const LogFn& log) {
  tcfg.validate();
  cfg.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");

  Model model(cfg, seed);
  std::seed_seq seq{seed, std::uint64_t{0x747261696e}};
  std::mt19937_64 rng(seq);
  const AdamConfig adam{tcfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
  const std::string metric = selection_metric(cfg.task);

  RunRecord record;
  record.task = cfg.task;
  record.variant = cfg.variant;
  record.seed = seed;
  record.selection_metric = metric;
  std::optional<ParamStore> best;
  std::optional<double> best_metric;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  auto& params = model.params();
  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const Episode& e = train_set[order[k]];
        Graph g;
        const auto out = model.forward(g, e, table, ForwardContext{true, &rng});
        const Var loss = task_loss(g, out, e.labels, cfg.task);
        const double value = g.value(loss).values[0];
        if (!std::isfinite(value)) {
          throw TrainingAbort("non-finite loss " + fmt("%g", value) + " at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_no + 1) + " (episode " + e.patient_id + ")");
        }
        g.backward(loss);
        g.accumulate_into(params);
        batch_loss += value;
      }
      epoch_loss += batch_loss;
      params.scale_grad(1.0 / static_cast<double>(end - start));
      if (tcfg.clip_norm > 0.0) params.clip_grad_norm(tcfg.clip_norm);
      adam_update(params, adam);
    }

    EpochRecord er;
    er.epoch = epoch;
    er.train_loss = epoch_loss / static_cast<double>(order.size());
    if (!val_set.empty()) {
      const auto m = score(predict_pooled(model, val_set, table));
      if (auto it = m.find(metric); it != m.end()) er.val_metric = it->second;
    }
    if (er.val_metric && (!best_metric || *er.val_metric > *best_metric)) {
      best_metric = er.val_metric;
      best = params;
      record.selected_epoch = epoch;
    }
    if (log) {
      log(std::string(to_string(cfg.task)) + "/" + std::string(to_string(cfg.variant)) + " seed " +
          std::to_string(seed) + " epoch " + std::to_string(epoch) + " loss " + fmt("%.5f", er.train_loss) +
          (er.val_metric ? " val " + metric + " " + fmt("%.4f", *er.val_metric) : std::string()));
    }
    record.epochs.push_back(er);
  }

  if (best) {
    params = std::move(*best);
  } else {
    record.selected_epoch = tcfg.epochs;
  }
  params.clear_grad();
  return {std::move(record), std::move(model)};
}

const ExperimentRow* ExperimentTable::find(Task task, Variant variant) const {
  for (const auto& r : rows) {
    if (r.task == task && r.variant == variant) return &r;
  }
  return nullptr;
}

std::string ExperimentTable::to_json_lines() const {
  std::string out;
  for (const auto& r : rows) {
    for (const auto& [name, rep] : r.metrics) {
      json j;
      j["task"] = std::string(to_string(r.task));
      j["variant"] = std::string(to_string(r.variant));
      j["metric"] = name;
      j["seeds"] = rep.values;
      j["mean"] = rep.mean;
      j["std"] = rep.stddev ? json(*rep.stddev) : json(nullptr);
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::string ExperimentTable::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-7s %-17s %-17s %-17s %-17s\n", "task", "variant", "auroc", "aucpr", "kappa");
  os << line;
  for (const auto& r : rows) {
    auto cell = [&](const char* name) {
      auto it = r.metrics.find(name);
      if (it == r.metrics.end()) return std::string("-");
      return fmt("%.4f", it->second.mean) + (it->second.stddev ? " +/- " + fmt("%.4f", *it->second.stddev) : "");
    };
    std::snprintf(line, sizeof line, "%-7s %-17s %-17s %-17s %-17s\n", std::string(to_string(r.task)).c_str(),
                  std::string(to_string(r.variant)).c_str(), cell("auroc").c_str(), cell("aucpr").c_str(),
                  cell("kappa").c_str());
    os << line;
  }
  return os.str();
}

ExperimentTable run_experiment(const std::map<Task, const Dataset*>& data, const ExperimentSpec& spec,
                               const LogFn& log) {
  spec.train.validate();
  ExperimentTable table;
  for (Task task : spec.tasks) {
    auto it = data.find(task);
    if (it == data.end() || !it->second) throw ValidationError("no dataset for task " + std::string(to_string(task)));
    const Dataset& ds = *it->second;
    if (ds.train.empty() || ds.test.empty()) {
      throw ValidationError("dataset for " + std::string(to_string(task)) + " has an empty train or test split");
    }
    for (Variant variant : spec.variants) {
      ModelConfig cfg = ModelConfig::defaults(task, variant, ds.train.front().features(), ds.table.dim());
      spec.overrides.apply(cfg);
      ExperimentRow row;
      row.task = task;
      row.variant = variant;
      std::map<std::string, std::vector<double>> values;
      for (auto seed : spec.train.seeds) {
        auto result = train(cfg, ds.train, ds.val, ds.table, spec.train, seed, log);
        result.record.test_metrics = evaluate(result.model, ds.test, ds.table, task);
        for (const auto& [name, v] : result.record.test_metrics) values[name].push_back(v);
        if (log) {
          std::string msg = std::string(to_string(task)) + "/" + std::string(to_string(variant)) + " seed " +
                            std::to_string(seed) + " test";
          for (const auto& [name, v] : result.record.test_metrics) msg += " " + name + " " + fmt("%.4f", v);
          log(msg);
        }
        row.runs.push_back(std::move(result.record));
      }
      for (const auto& [name, v] : values) row.metrics[name] = aggregate_seeds(v);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

ExperimentTable run_experiment(const std::filesystem::path& root, const ExperimentSpec& spec, const LogFn& log) {
  std::map<Task, Dataset> loaded;
  std::map<Task, const Dataset*> ptrs;
  for (Task task : spec.tasks) {
    auto& ds = loaded[task] = load_dataset(root, task);
    if (log) {
      log(std::string(to_string(task)) + ": " + std::to_string(ds.train.size()) + " train, " +
          std::to_string(ds.val.size()) + " val, " + std::to_string(ds.test.size()) + " test, " +
          std::to_string(ds.excluded.size()) + " excluded");
    }
    ptrs[task] = &ds;
  }
  return run_experiment(ptrs, spec, log);
}

}  // namespace icumm
