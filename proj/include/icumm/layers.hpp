#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "icumm/graph.hpp"

namespace icumm {

inline constexpr double kProbEpsilon = 1e-7;

// Plain numeric helpers shared by the graph ops and by evaluation code.
double sigmoid(double x);
std::vector<double> softmax(std::span<const double> logits);
/// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1-1e-7]. Label must be 0 or 1.
double binary_ce(double prob, int label);
/// -ln probs[label], probs clamped below at 1e-7. Probs must sum to 1 within 1e-9.
double multiclass_ce(std::span<const double> probs, int label);

/// out = weight * input + bias.
Var dense(Graph& g, Var input, Var weight, Var bias);

/// One affine head over several inputs sharing a single bias:
/// out = sum_k weights[k] * inputs[k] + bias.
Var fused_dense(Graph& g, std::span<const Var> inputs, std::span<const Var> weights, Var bias);

struct LstmState {
  Var hidden;
  Var cell;
};

/// Gate blocks are stacked in the order input, forget, candidate, output.
struct LstmWeights {
  Var input_weight;   // [4H x D]
  Var hidden_weight;  // [4H x H]
  Var bias;           // [4H]
};

LstmState lstm_zero_state(Graph& g, std::size_t hidden_size);
LstmState lstm_cell_step(Graph& g, Var x, const LstmState& prev, const LstmWeights& w);

/// Kernels for one width are stored as [filters x (width * E)], a window of
/// `width` consecutive embedding rows flattened row-major.
struct ConvWeights {
  std::vector<std::size_t> widths;
  std::vector<Var> kernels;
  std::vector<Var> biases;
};

/// Valid 1D convolution over an [n x E] embedding matrix, ReLU, then max over
/// positions. Output is the per-width pooled filters concatenated in width order.
/// Ties in the max go to the lowest position.
Var conv1d_maxpool(Graph& g, Var embeds, const ConvWeights& w);

/// Inverted dropout. Returns `input` unchanged when not training or rate == 0.
Var dropout(Graph& g, Var input, double rate, bool training, std::mt19937_64& rng);

/// (sum_i weights[i] * inputs[i]) / divisor, summed in input order; zero
/// vector of `size` when inputs is empty.
Var weighted_sum(Graph& g, std::span<const Var> inputs, std::span<const double> weights, std::size_t size,
                 double divisor = 1.0);

Var slice(Graph& g, Var input, std::size_t offset, std::size_t length);
Var sigmoid(Graph& g, Var logits);
Var softmax(Graph& g, Var logits);

/// Binary cross-entropy on a scalar logit; d/dlogit = sigmoid(logit) - label.
Var sigmoid_bce(Graph& g, Var logit, int label);
/// Softmax cross-entropy; d/dlogits = softmax(logits) - onehot(label).
Var softmax_ce(Graph& g, Var logits, int label);
/// Mean of scalar nodes.
Var mean(Graph& g, std::span<const Var> scalars);

}  // namespace icumm
