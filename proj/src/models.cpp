#include "icumm/models.hpp"

#include <cmath>
#include <json.hpp>

#include "icumm/errors.hpp"
#include "icumm/text_features.hpp"

namespace icumm {

using json = nlohmann::json;
namespace pn = param_names;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::multimodal_cnn: return "multimodal_cnn";
    case Variant::multimodal_avgwe: return "multimodal_avgwe";
    case Variant::text_only: return "text_only";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "multimodal_cnn") return Variant::multimodal_cnn;
  if (name == "multimodal_avgwe") return Variant::multimodal_avgwe;
  if (name == "text_only") return Variant::text_only;
  throw ValidationError("unknown variant '" + std::string(name) +
                        "' (expected baseline, multimodal_cnn, multimodal_avgwe or text_only)");
}

ModelConfig ModelConfig::defaults(Task task, Variant variant, std::size_t feature_dim, std::size_t embed_dim) {
  ModelConfig cfg;
  cfg.task = task;
  cfg.variant = variant;
  cfg.feature_dim = feature_dim;
  cfg.embed_dim = embed_dim;
  if (task == Task::ihm) {
    cfg.hidden = 256;
    cfg.filters = 256;
  } else {
    cfg.hidden = 64;
    cfg.filters = 128;
  }
  return cfg;
}

std::size_t ModelConfig::text_dim() const {
  switch (variant) {
    case Variant::baseline: return 0;
    case Variant::multimodal_avgwe: return embed_dim;
    case Variant::multimodal_cnn:
    case Variant::text_only: return widths.size() * filters;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (uses_series() && (hidden == 0 || feature_dim == 0)) throw ValidationError("hidden size and feature dim must be positive");
  if (uses_text() && embed_dim == 0) throw ValidationError("embedding dim must be positive");
  if (uses_conv()) {
    if (widths.empty() || filters == 0) throw ValidationError("conv needs at least one width and one filter");
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] == 0) throw ValidationError("conv widths must be positive");
      for (std::size_t j = 0; j < i; ++j) {
        if (widths[i] == widths[j]) throw ValidationError("duplicate conv width " + std::to_string(widths[i]));
      }
    }
  }
  if (!(decay_lambda >= 0.0)) throw ValidationError("decay lambda must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be non-negative");
}

std::string ModelConfig::to_json() const {
  json j;
  j["task"] = std::string(to_string(task));
  j["variant"] = std::string(to_string(variant));
  j["hidden"] = hidden;
  j["widths"] = widths;
  j["filters"] = filters;
  j["decay_lambda"] = decay_lambda;
  j["dropout"] = dropout;
  j["weight_decay"] = weight_decay;
  j["embed_dim"] = embed_dim;
  j["feature_dim"] = feature_dim;
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  ModelConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.task = parse_task(j.at("task").get<std::string>());
    cfg.variant = parse_variant(j.at("variant").get<std::string>());
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.widths = j.at("widths").get<std::vector<std::size_t>>();
    cfg.filters = j.at("filters").get<std::size_t>();
    cfg.decay_lambda = j.at("decay_lambda").get<double>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
  } catch (const json::exception& ex) {
    throw ParseError(std::string("model config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto& v : t.values) v = u(rng);
}

Var param(Graph& g, const ParamStore& params, std::string_view name) { return g.parameter(params, params.index(name)); }

std::mt19937_64& dropout_rng(const ForwardContext& ctx, double rate) {
  static thread_local std::mt19937_64 unused;
  if (ctx.training && rate > 0.0) {
    if (!ctx.rng) throw InternalError("training forward with dropout needs an rng");
    return *ctx.rng;
  }
  return unused;
}

int series_hours(const Episode& e, Task task) {
  const int T = e.hours();
  if (task == Task::ihm) {
    if (T < kIhmHours) throw ValidationError("episode " + e.patient_id + ": stay shorter than 48h");
    return kIhmHours;
  }
  if (T < kFirstPredictionHour) throw ValidationError("episode " + e.patient_id + ": stay shorter than 5h");
  return T;
}

/// Hidden states h_1..h_hours.
std::vector<Var> encode_series(Graph& g, const Episode& e, const ParamStore& params, const ModelConfig& cfg, int hours) {
  if (e.features() != cfg.feature_dim) {
    throw DimensionError("episode " + e.patient_id + " has " + std::to_string(e.features()) +
                         " features, model expects " + std::to_string(cfg.feature_dim));
  }
  const LstmWeights w{param(g, params, pn::lstm_input), param(g, params, pn::lstm_hidden),
                      param(g, params, pn::lstm_bias)};
  LstmState state = lstm_zero_state(g, cfg.hidden);
  std::vector<Var> hidden;
  hidden.reserve(static_cast<std::size_t>(hours));
  for (int t = 1; t <= hours; ++t) {
    auto row = e.row(t);
    Var x = g.constant(Tensor({row.size()}, std::vector<double>(row.begin(), row.end())));
    state = lstm_cell_step(g, x, state, w);
    hidden.push_back(state.hidden);
  }
  return hidden;
}

/// Text feature of one (possibly concatenated) note, before dropout.
Var note_feature(Graph& g, const ClinicalNote& note, const EmbeddingTable& table, const ModelConfig& cfg,
                 const ConvWeights* conv) {
  if (table.dim() != cfg.embed_dim) {
    throw DimensionError("embedding table has dim " + std::to_string(table.dim()) + ", model expects " +
                         std::to_string(cfg.embed_dim));
  }
  if (cfg.variant == Variant::multimodal_avgwe) return g.constant(avg_word_embedding(note.token_ids, table));
  return note_cnn_feature(g, note, table, *conv);
}

/// Stay-level document for IHM: notes charted within the first 48 hours.
ClinicalNote ihm_document(const Episode& e) {
  std::vector<ClinicalNote> early;
  for (const auto& n : e.notes) {
    if (n.chart_time <= kIhmHours) early.push_back(n);
  }
  if (early.empty()) return ClinicalNote{kIhmHours, {}};
  return concat_notes(early);
}

Var ihm_text_feature(Graph& g, const Episode& e, const EmbeddingTable& table, const ParamStore& params,
                     const ModelConfig& cfg, const ForwardContext& ctx) {
  ConvWeights conv;
  if (cfg.uses_conv()) conv = bind_conv(g, params, cfg.widths);
  Var z = note_feature(g, ihm_document(e), table, cfg, cfg.uses_conv() ? &conv : nullptr);
  return dropout(g, z, cfg.dropout, ctx.training, dropout_rng(ctx, cfg.dropout));
}

/// Decayed text features z_t for t = 5..T.
std::vector<Var> hourly_text_features(Graph& g, const Episode& e, const EmbeddingTable& table,
                                      const ParamStore& params, const ModelConfig& cfg, const ForwardContext& ctx) {
  ConvWeights conv;
  if (cfg.uses_conv()) conv = bind_conv(g, params, cfg.widths);
  std::vector<Var> per_note;
  std::vector<int> times;
  for (const auto& note : e.notes) {
    Var z = note_feature(g, note, table, cfg, cfg.uses_conv() ? &conv : nullptr);
    per_note.push_back(dropout(g, z, cfg.dropout, ctx.training, dropout_rng(ctx, cfg.dropout)));
    times.push_back(note.chart_time);
  }
  std::vector<Var> out;
  for (int t = kFirstPredictionHour; t <= e.hours(); ++t) {
    out.push_back(aggregate_note_features(g, per_note, times, t, cfg.decay_lambda, cfg.text_dim()));
  }
  return out;
}

void require_variant(const ModelConfig& cfg, bool ok, const char* fn) {
  if (!ok) throw InternalError(std::string(fn) + " called for variant " + std::string(to_string(cfg.variant)));
}

}  // namespace

ForwardOutput baseline_forward(Graph& g, const Episode& e, const ParamStore& params, const ModelConfig& cfg,
                               const ForwardContext& ctx) {
  require_variant(cfg, cfg.variant == Variant::baseline, "baseline_forward");
  const int hours = series_hours(e, cfg.task);
  const auto hidden = encode_series(g, e, params, cfg, hours);
  Var w = param(g, params, pn::head_series);
  Var b = param(g, params, pn::head_bias);
  auto& rng = dropout_rng(ctx, cfg.dropout);

  ForwardOutput out;
  const int first = cfg.task == Task::ihm ? kIhmHours : kFirstPredictionHour;
  for (int t = first; t <= hours; ++t) {
    Var h = dropout(g, hidden[static_cast<std::size_t>(t - 1)], cfg.dropout, ctx.training, rng);
    out.hours.push_back(t);
    out.logits.push_back(dense(g, h, w, b));
  }
  return out;
}

ForwardOutput ihm_multimodal_forward(Graph& g, const Episode& e, const EmbeddingTable& table,
                                     const ParamStore& params, const ModelConfig& cfg, const ForwardContext& ctx) {
  require_variant(cfg, cfg.task == Task::ihm && cfg.uses_series() && cfg.uses_text(), "ihm_multimodal_forward");
  const auto hidden = encode_series(g, e, params, cfg, series_hours(e, cfg.task));
  Var h = dropout(g, hidden.back(), cfg.dropout, ctx.training, dropout_rng(ctx, cfg.dropout));
  Var z = ihm_text_feature(g, e, table, params, cfg, ctx);
  const Var inputs[] = {h, z};
  const Var weights[] = {param(g, params, pn::head_series), param(g, params, pn::head_text)};
  return {{kIhmHours}, {fused_dense(g, inputs, weights, param(g, params, pn::head_bias))}};
}

ForwardOutput seq_multimodal_forward(Graph& g, const Episode& e, const EmbeddingTable& table,
                                     const ParamStore& params, const ModelConfig& cfg, const ForwardContext& ctx) {
  require_variant(cfg, cfg.task != Task::ihm && cfg.uses_series() && cfg.uses_text(), "seq_multimodal_forward");
  const int hours = series_hours(e, cfg.task);
  const auto hidden = encode_series(g, e, params, cfg, hours);
  const auto text = hourly_text_features(g, e, table, params, cfg, ctx);
  const Var weights[] = {param(g, params, pn::head_series), param(g, params, pn::head_text)};
  Var b = param(g, params, pn::head_bias);
  auto& rng = dropout_rng(ctx, cfg.dropout);

  ForwardOutput out;
  for (int t = kFirstPredictionHour; t <= hours; ++t) {
    Var h = dropout(g, hidden[static_cast<std::size_t>(t - 1)], cfg.dropout, ctx.training, rng);
    const Var inputs[] = {h, text[static_cast<std::size_t>(t - kFirstPredictionHour)]};
    out.hours.push_back(t);
    out.logits.push_back(fused_dense(g, inputs, weights, b));
  }
  return out;
}

ForwardOutput text_only_forward(Graph& g, const Episode& e, const EmbeddingTable& table, const ParamStore& params,
                                const ModelConfig& cfg, const ForwardContext& ctx) {
  require_variant(cfg, cfg.variant == Variant::text_only, "text_only_forward");
  const int hours = series_hours(e, cfg.task);
  Var w = param(g, params, pn::head_text);
  Var b = param(g, params, pn::head_bias);
  if (cfg.task == Task::ihm) return {{kIhmHours}, {dense(g, ihm_text_feature(g, e, table, params, cfg, ctx), w, b)}};

  const auto text = hourly_text_features(g, e, table, params, cfg, ctx);
  ForwardOutput out;
  for (int t = kFirstPredictionHour; t <= hours; ++t) {
    out.hours.push_back(t);
    out.logits.push_back(dense(g, text[static_cast<std::size_t>(t - kFirstPredictionHour)], w, b));
  }
  return out;
}

Var task_loss(Graph& g, const ForwardOutput& out, const EpisodeLabels& labels, Task task) {
  if (task == Task::ihm) {
    if (out.logits.size() != 1) throw InternalError("IHM forward must yield one logit");
    if (!labels.mortality) throw ValidationError("IHM loss needs a mortality label");
    return sigmoid_bce(g, out.logits[0], *labels.mortality);
  }
  const auto& target = task == Task::decomp ? labels.decompensation : labels.los_bucket;
  if (target.size() != out.logits.size()) {
    throw InternalError("prediction/label length mismatch: " + std::to_string(out.logits.size()) + " vs " +
                        std::to_string(target.size()));
  }
  std::vector<Var> terms;
  terms.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    terms.push_back(task == Task::decomp ? sigmoid_bce(g, out.logits[i], target[i])
                                         : softmax_ce(g, out.logits[i], target[i]));
  }
  return mean(g, terms);
}

double compute_loss(const PredictionSeries& predictions, const EpisodeLabels& labels, Task task) {
  if (task == Task::ihm) {
    if (predictions.probs.size() != 1) throw InternalError("IHM predictions must hold one entry");
    if (!labels.mortality) throw ValidationError("IHM loss needs a mortality label");
    return binary_ce(predictions.probs[0].at(0), *labels.mortality);
  }
  const auto& target = task == Task::decomp ? labels.decompensation : labels.los_bucket;
  if (target.size() != predictions.probs.size() || target.empty()) {
    throw InternalError("prediction/label length mismatch: " + std::to_string(predictions.probs.size()) + " vs " +
                        std::to_string(target.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    sum += task == Task::decomp ? binary_ce(predictions.probs[i].at(0), target[i])
                                : multiclass_ce(predictions.probs[i], target[i]);
  }
  return sum / static_cast<double>(target.size());
}

ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore store;
  const std::size_t H = cfg.hidden;
  const std::size_t C = cfg.classes();
  if (cfg.uses_series()) {
    Tensor wx({4 * H, cfg.feature_dim});
    glorot(wx, cfg.feature_dim, 4 * H, rng);
    Tensor wh({4 * H, H});
    glorot(wh, H, 4 * H, rng);
    Tensor b({4 * H});
    for (std::size_t k = H; k < 2 * H; ++k) b.values[k] = 1.0;
    store.add(std::string(pn::lstm_input), std::move(wx));
    store.add(std::string(pn::lstm_hidden), std::move(wh));
    store.add(std::string(pn::lstm_bias), std::move(b));
  }
  if (cfg.uses_conv()) {
    for (auto width : cfg.widths) {
      Tensor k({cfg.filters, width * cfg.embed_dim});
      glorot(k, width * cfg.embed_dim, cfg.filters, rng);
      store.add(conv_kernel_name(width), std::move(k));
      store.add(conv_bias_name(width), Tensor({cfg.filters}));
    }
  }
  if (cfg.uses_series()) {
    Tensor w({C, H});
    glorot(w, H, C, rng);
    store.add(std::string(pn::head_series), std::move(w));
  }
  if (cfg.uses_text()) {
    Tensor w({C, cfg.text_dim()});
    glorot(w, cfg.text_dim(), C, rng);
    store.add(std::string(pn::head_text), std::move(w));
  }
  store.add(std::string(pn::head_bias), Tensor({C}));
  return store;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), params_(init_params(cfg_, seed)) {}

Model::Model(ModelConfig cfg, ParamStore params) : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  const ParamStore expected = init_params(cfg_, 0);
  if (expected.size() != params_.size()) {
    throw ValidationError("parameter set does not match a " + std::string(to_string(cfg_.variant)) + " model");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& name = expected.name(i);
    if (!params_.contains(name)) throw ValidationError("missing parameter '" + name + "'");
    if (params_.get(name).shape != expected[i].shape) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_string(params_.get(name).shape) + ", expected " +
                           shape_string(expected[i].shape));
    }
  }
}

ForwardOutput Model::forward(Graph& g, const Episode& e, const EmbeddingTable& table, const ForwardContext& ctx) const {
  switch (cfg_.variant) {
    case Variant::baseline: return baseline_forward(g, e, params_, cfg_, ctx);
    case Variant::text_only: return text_only_forward(g, e, table, params_, cfg_, ctx);
    case Variant::multimodal_cnn:
    case Variant::multimodal_avgwe:
      return cfg_.task == Task::ihm ? ihm_multimodal_forward(g, e, table, params_, cfg_, ctx)
                                    : seq_multimodal_forward(g, e, table, params_, cfg_, ctx);
  }
  throw InternalError("unhandled variant");
}

PredictionSeries to_predictions(const Graph& g, const ForwardOutput& out, Task task) {
  PredictionSeries p;
  p.task = task;
  p.hours = out.hours;
  for (auto v : out.logits) {
    const auto& logits = g.value(v).values;
    if (task == Task::los) {
      p.probs.push_back(softmax(logits));
    } else {
      p.probs.push_back({sigmoid(logits.at(0))});
    }
  }
  return p;
}

PredictionSeries Model::predict(const Episode& e, const EmbeddingTable& table) const {
  Graph g(false);
  const auto out = forward(g, e, table, ForwardContext{});
  return to_predictions(g, out, cfg_.task);
}

}  // namespace icumm
