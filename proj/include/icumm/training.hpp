#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icumm/ingestion.hpp"
#include "icumm/metrics.hpp"
#include "icumm/models.hpp"

namespace icumm {

using LogFn = std::function<void(const std::string&)>;

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double clip_norm = 5.0;  // 0 disables clipping

  void validate() const;
};

/// "aucpr" for IHM and decompensation, "kappa" for LOS.
std::string selection_metric(Task task);

/// Optional replacements for task defaults.
struct ModelOverrides {
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> filters;
  std::optional<std::vector<std::size_t>> widths;
  std::optional<double> decay_lambda;
  std::optional<double> dropout;
  std::optional<double> weight_decay;

  void apply(ModelConfig& cfg) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_metric;
};

struct RunRecord {
  Task task = Task::ihm;
  Variant variant = Variant::baseline;
  std::uint64_t seed = 0;
  std::string selection_metric;
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> selected_epoch;
  std::map<std::string, double> test_metrics;

  std::string to_json() const;
};

struct TrainResult {
  RunRecord record;
  Model model;  // parameters from the selected epoch
};

/// Mini-batch Adam training with per-epoch validation. Each batch gradient is
/// the mean of per-episode gradients. The epoch with the best validation
/// metric is kept; when the metric is never defined, the last epoch is kept.
/// Throws TrainingAbort on a non-finite loss.
TrainResult train(const ModelConfig& cfg, const std::vector<Episode>& train_set, const std::vector<Episode>& val_set,
                  const EmbeddingTable& table, const TrainConfig& tcfg, std::uint64_t seed, const LogFn& log = {});

/// Pooled predictions over every (episode, hour).
struct PooledPredictions {
  Task task = Task::ihm;
  std::vector<double> scores;  // probability of the positive class (binary tasks)
  std::vector<int> labels;
  std::vector<int> predicted;  // argmax bucket (LOS)
  double mean_loss = 0.0;      // per-episode loss averaged over episodes
};

PooledPredictions predict_pooled(const Model& model, const std::vector<Episode>& episodes,
                                 const EmbeddingTable& table);

/// Metrics for the model's task with dropout off: auroc and aucpr for binary
/// tasks, kappa for LOS. Undefined metrics are left out.
/// Throws ValidationError when `task` differs from the model's task.
std::map<std::string, double> evaluate(const Model& model, const std::vector<Episode>& episodes,
                                       const EmbeddingTable& table, Task task);

struct ExperimentSpec {
  std::vector<Task> tasks = {Task::ihm, Task::decomp, Task::los};
  std::vector<Variant> variants = {Variant::baseline, Variant::text_only, Variant::multimodal_avgwe,
                                   Variant::multimodal_cnn};
  TrainConfig train;
  ModelOverrides overrides;
};

struct ExperimentRow {
  Task task = Task::ihm;
  Variant variant = Variant::baseline;
  std::map<std::string, MetricsReport> metrics;
  std::vector<RunRecord> runs;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;

  const ExperimentRow* find(Task task, Variant variant) const;
  /// One `{"task","variant","metric","seeds","mean","std"}` object per line.
  std::string to_json_lines() const;
  /// Fixed-width text table, one row per (task, variant).
  std::string to_text() const;
};

/// Trains every (task, variant, seed) on the dataset at `root` and scores the test split.
ExperimentTable run_experiment(const std::filesystem::path& root, const ExperimentSpec& spec, const LogFn& log = {});

/// Same as above on already-loaded datasets, one per task in `spec.tasks`.
ExperimentTable run_experiment(const std::map<Task, const Dataset*>& data, const ExperimentSpec& spec,
                               const LogFn& log = {});

}  // namespace icumm
