#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "icumm/data_model.hpp"
#include "icumm/graph.hpp"
#include "icumm/layers.hpp"
#include "icumm/param_store.hpp"

namespace icumm {

enum class Variant { baseline, multimodal_cnn, multimodal_avgwe, text_only };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Task task = Task::ihm;
  Variant variant = Variant::baseline;
  std::size_t hidden = 256;
  std::vector<std::size_t> widths = {2, 3, 4};
  std::size_t filters = 256;  // per width
  double decay_lambda = 0.01;
  double dropout = 0.2;
  double weight_decay = 0.01;
  std::size_t embed_dim = 200;
  std::size_t feature_dim = 17;

  /// Defaults for a task: IHM uses a 256-unit LSTM and 256 filters per width,
  /// decompensation and LOS a 64-unit LSTM and 128 filters per width.
  static ModelConfig defaults(Task task, Variant variant, std::size_t feature_dim, std::size_t embed_dim);

  bool uses_series() const { return variant != Variant::text_only; }
  bool uses_text() const { return variant != Variant::baseline; }
  bool uses_conv() const { return variant == Variant::multimodal_cnn || variant == Variant::text_only; }
  /// Size of the text feature vector fed to the head (0 for the baseline).
  std::size_t text_dim() const;
  /// Head outputs: 10 for LOS, 1 otherwise.
  std::size_t classes() const { return task == Task::los ? kLosBuckets : 1; }

  /// Throws ValidationError on an inconsistent configuration.
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);
};

/// Per-hour model output. IHM has a single entry at hour 48; decompensation
/// one probability per hour 5..T; LOS a 10-way distribution per hour.
struct PredictionSeries {
  Task task = Task::ihm;
  std::vector<int> hours;
  std::vector<std::vector<double>> probs;
};

/// Graph-level output: one logit vector per predicted hour.
struct ForwardOutput {
  std::vector<int> hours;
  std::vector<Var> logits;
};

/// Parameter names shared by every variant that has the component.
namespace param_names {
inline constexpr std::string_view lstm_input = "lstm.wx";
inline constexpr std::string_view lstm_hidden = "lstm.wh";
inline constexpr std::string_view lstm_bias = "lstm.b";
inline constexpr std::string_view head_series = "head.series.w";
inline constexpr std::string_view head_text = "head.text.w";
inline constexpr std::string_view head_bias = "head.b";
}  // namespace param_names

struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
};

// Variant forwards. Each expects an episode that passes validate_episode for cfg.task.
ForwardOutput baseline_forward(Graph& g, const Episode& e, const ParamStore& params, const ModelConfig& cfg,
                               const ForwardContext& ctx);
ForwardOutput ihm_multimodal_forward(Graph& g, const Episode& e, const EmbeddingTable& table,
                                     const ParamStore& params, const ModelConfig& cfg, const ForwardContext& ctx);
ForwardOutput seq_multimodal_forward(Graph& g, const Episode& e, const EmbeddingTable& table,
                                     const ParamStore& params, const ModelConfig& cfg, const ForwardContext& ctx);
ForwardOutput text_only_forward(Graph& g, const Episode& e, const EmbeddingTable& table, const ParamStore& params,
                                const ModelConfig& cfg, const ForwardContext& ctx);

/// Task loss on the graph: BCE at hour 48 for IHM, mean per-hour CE otherwise.
Var task_loss(Graph& g, const ForwardOutput& out, const EpisodeLabels& labels, Task task);

/// Same loss computed from probabilities (no graph).
double compute_loss(const PredictionSeries& predictions, const EpisodeLabels& labels, Task task);

/// Parameters plus configuration for one (task, variant) model.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);
  Model(ModelConfig cfg, ParamStore params);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  ForwardOutput forward(Graph& g, const Episode& e, const EmbeddingTable& table, const ForwardContext& ctx) const;
  /// Inference: dropout off.
  PredictionSeries predict(const Episode& e, const EmbeddingTable& table) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

/// Fresh parameters for `cfg`: Glorot-uniform weights, zero biases, LSTM forget bias 1.
ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Converts graph logits to probabilities.
PredictionSeries to_predictions(const Graph& g, const ForwardOutput& out, Task task);

}  // namespace icumm
