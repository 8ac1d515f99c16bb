#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "icumm/data_model.hpp"
#include "icumm/graph.hpp"
#include "icumm/layers.hpp"

namespace icumm {

/// Per-note feature vector with the hour it became visible.
struct NoteFeature {
  int chart_time = 1;
  Tensor vector;
};

struct DecayConfig {
  double lambda = 0.01;
};

/// Right-pads with the reserved index 0 up to `min_length` tokens.
std::vector<TokenId> pad_tokens(std::span<const TokenId> ids, std::size_t min_length);

/// Joins notes in chart-time order (stable for equal times) into one note
/// charted at the latest input time. Throws ValidationError on empty input.
ClinicalNote concat_notes(std::span<const ClinicalNote> notes);

/// exp(-lambda * (t - ct)); ct > t is a ValidationError since future notes are invisible.
double decay_weight(int t, int ct, double lambda);

/// Notes visible at hour t (chart_time <= t) and their decay weights.
struct VisibleNotes {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};
VisibleNotes visible_notes(std::span<const int> chart_times, int t, double lambda);

/// z_t = (1/M) sum_{ct_i <= t} z_i w(t,i). Zero vector of size `dim` when M = 0.
Tensor aggregate_note_features(std::span<const NoteFeature> features, int t, double lambda, std::size_t dim);

/// Graph form of aggregate_note_features; gradients flow to every visible z_i.
Var aggregate_note_features(Graph& g, std::span<const Var> features, std::span<const int> chart_times, int t,
                            double lambda, std::size_t dim);

/// Mean of token vectors; out-of-vocabulary tokens count as zero vectors.
/// Empty input gives the zero vector.
Tensor avg_word_embedding(std::span<const TokenId> ids, const EmbeddingTable& table);

std::string conv_kernel_name(std::size_t width);
std::string conv_bias_name(std::size_t width);
/// Graph leaves for the conv kernels stored in `params` under conv_kernel_name/conv_bias_name.
ConvWeights bind_conv(Graph& g, const ParamStore& params, std::span<const std::size_t> widths);

/// CNN features of one note on `g`. The note is padded to the widest kernel first.
Var note_cnn_feature(Graph& g, const ClinicalNote& note, const EmbeddingTable& table, const ConvWeights& conv);

/// Stand-alone CNN feature of one note, no gradient tracking.
NoteFeature extract_note_feature(const ClinicalNote& note, const EmbeddingTable& table, const ParamStore& params,
                                 std::span<const std::size_t> widths);

}  // namespace icumm
