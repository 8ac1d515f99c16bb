#include "icumm/text_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icumm/errors.hpp"

namespace icumm {

std::vector<TokenId> pad_tokens(std::span<const TokenId> ids, std::size_t min_length) {
  std::vector<TokenId> out(ids.begin(), ids.end());
  if (out.size() < min_length) out.resize(min_length, 0);
  return out;
}

ClinicalNote concat_notes(std::span<const ClinicalNote> notes) {
  if (notes.empty()) throw ValidationError("cannot concatenate an empty note sequence");
  std::vector<std::size_t> order(notes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return notes[a].chart_time < notes[b].chart_time; });
  ClinicalNote out;
  out.chart_time = notes[order.back()].chart_time;
  for (auto i : order) out.token_ids.insert(out.token_ids.end(), notes[i].token_ids.begin(), notes[i].token_ids.end());
  return out;
}

double decay_weight(int t, int ct, double lambda) {
  if (ct > t) {
    throw ValidationError("note charted at hour " + std::to_string(ct) + " is not visible at hour " + std::to_string(t));
  }
  if (lambda < 0.0) throw ValidationError("decay lambda must be non-negative");
  return std::exp(-lambda * static_cast<double>(t - ct));
}

VisibleNotes visible_notes(std::span<const int> chart_times, int t, double lambda) {
  VisibleNotes out;
  for (std::size_t i = 0; i < chart_times.size(); ++i) {
    if (chart_times[i] > t) continue;
    out.index.push_back(i);
    out.weight.push_back(decay_weight(t, chart_times[i], lambda));
  }
  return out;
}

Tensor aggregate_note_features(std::span<const NoteFeature> features, int t, double lambda, std::size_t dim) {
  Tensor out({dim});
  std::size_t m = 0;
  for (const auto& f : features) {
    if (f.chart_time > t) continue;
    if (f.vector.size() != dim) throw DimensionError("note feature " + shape_string(f.vector.shape) + " vs expected size " + std::to_string(dim));
    const double w = decay_weight(t, f.chart_time, lambda);
    for (std::size_t k = 0; k < dim; ++k) out.values[k] += w * f.vector.values[k];
    ++m;
  }
  if (m > 0) {
    for (auto& v : out.values) v /= static_cast<double>(m);
  }
  return out;
}

Var aggregate_note_features(Graph& g, std::span<const Var> features, std::span<const int> chart_times, int t,
                            double lambda, std::size_t dim) {
  if (features.size() != chart_times.size()) throw InternalError("one chart time per note feature expected");
  const auto vis = visible_notes(chart_times, t, lambda);
  std::vector<Var> terms;
  terms.reserve(vis.index.size());
  for (auto i : vis.index) terms.push_back(features[i]);
  const double m = vis.index.empty() ? 1.0 : static_cast<double>(vis.index.size());
  return weighted_sum(g, terms, vis.weight, dim, m);
}

Tensor avg_word_embedding(std::span<const TokenId> ids, const EmbeddingTable& table) {
  Tensor out({table.dim()});
  if (ids.empty()) return out;
  for (auto id : ids) {
    auto v = table.vector(id);
    for (std::size_t k = 0; k < v.size(); ++k) out.values[k] += v[k];
  }
  for (auto& v : out.values) v /= static_cast<double>(ids.size());
  return out;
}

std::string conv_kernel_name(std::size_t width) { return "conv.w" + std::to_string(width); }
std::string conv_bias_name(std::size_t width) { return "conv.b" + std::to_string(width); }

ConvWeights bind_conv(Graph& g, const ParamStore& params, std::span<const std::size_t> widths) {
  ConvWeights w;
  for (auto width : widths) {
    w.widths.push_back(width);
    w.kernels.push_back(g.parameter(params, params.index(conv_kernel_name(width))));
    w.biases.push_back(g.parameter(params, params.index(conv_bias_name(width))));
  }
  return w;
}

Var note_cnn_feature(Graph& g, const ClinicalNote& note, const EmbeddingTable& table, const ConvWeights& conv) {
  const std::size_t max_width = *std::max_element(conv.widths.begin(), conv.widths.end());
  const auto ids = pad_tokens(note.token_ids, max_width);
  return conv1d_maxpool(g, g.constant(table.embed(ids)), conv);
}

NoteFeature extract_note_feature(const ClinicalNote& note, const EmbeddingTable& table, const ParamStore& params,
                                 std::span<const std::size_t> widths) {
  Graph g(false);
  const auto conv = bind_conv(g, params, widths);
  Var z = note_cnn_feature(g, note, table, conv);
  return {note.chart_time, g.value(z)};
}

}  // namespace icumm
