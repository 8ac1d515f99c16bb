#include "icumm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

void require_vector(const Tensor& t, const char* what) {
  if (t.rank() != 1) throw DimensionError(std::string(what) + " must be a vector, got " + shape_string(t.shape));
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(t.shape));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

double binary_ce(double prob, int label) {
  if (label != 0 && label != 1) throw ValidationError("binary label must be 0 or 1, got " + std::to_string(label));
  const double p = std::clamp(prob, kProbEpsilon, 1.0 - kProbEpsilon);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double multiclass_ce(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ValidationError("class label " + std::to_string(label) + " outside [0, " + std::to_string(probs.size()) + ")");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("class probabilities sum to " + std::to_string(sum));
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbEpsilon));
}

Var dense(Graph& g, Var input, Var weight, Var bias) {
  const Var inputs[] = {input};
  const Var weights[] = {weight};
  return fused_dense(g, inputs, weights, bias);
}

Var fused_dense(Graph& g, std::span<const Var> inputs, std::span<const Var> weights, Var bias) {
  if (inputs.size() != weights.size() || inputs.empty()) throw InternalError("fused_dense needs one weight per input");
  const Tensor& b = g.value(bias);
  require_vector(b, "bias");
  const std::size_t m = b.size();
  bool needs_grad = g.requires_grad(bias);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& w = g.value(weights[k]);
    const Tensor& x = g.value(inputs[k]);
    require_vector(x, "dense input");
    require_matrix(w, "dense weight");
    if (w.dim(0) != m || w.dim(1) != x.size()) {
      throw DimensionError("dense weight " + shape_string(w.shape) + " does not map input " + shape_string(x.shape) +
                           " to bias " + shape_string(b.shape));
    }
    needs_grad = needs_grad || g.requires_grad(inputs[k]) || g.requires_grad(weights[k]);
  }

  Tensor out({m});
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const Tensor& w = g.value(weights[k]);
      const Tensor& x = g.value(inputs[k]);
      const std::size_t n = x.size();
      const double* row = w.values.data() + j * n;
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += row[c] * x.values[c];
      acc += s;
    }
    out.values[j] = acc + b.values[j];
  }

  std::vector<Var> in(inputs.begin(), inputs.end());
  std::vector<Var> ws(weights.begin(), weights.end());
  return g.record(std::move(out), needs_grad, [in, ws, bias, m](Graph& g, std::span<const double> up) {
    if (g.requires_grad(bias)) {
      auto gb = g.grad(bias);
      for (std::size_t j = 0; j < m; ++j) gb[j] += up[j];
    }
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Tensor& w = g.value(ws[k]);
      const Tensor& x = g.value(in[k]);
      const std::size_t n = x.size();
      if (g.requires_grad(ws[k])) {
        auto gw = g.grad(ws[k]);
        for (std::size_t j = 0; j < m; ++j) {
          if (up[j] == 0.0) continue;
          double* row = gw.data() + j * n;
          for (std::size_t c = 0; c < n; ++c) row[c] += up[j] * x.values[c];
        }
      }
      if (g.requires_grad(in[k])) {
        auto gx = g.grad(in[k]);
        for (std::size_t j = 0; j < m; ++j) {
          if (up[j] == 0.0) continue;
          const double* row = w.values.data() + j * n;
          for (std::size_t c = 0; c < n; ++c) gx[c] += up[j] * row[c];
        }
      }
    }
  });
}

LstmState lstm_zero_state(Graph& g, std::size_t hidden_size) {
  return {g.constant(Tensor::zeros({hidden_size})), g.constant(Tensor::zeros({hidden_size}))};
}

LstmState lstm_cell_step(Graph& g, Var x, const LstmState& prev, const LstmWeights& w) {
  const Tensor& xv = g.value(x);
  const Tensor& hv = g.value(prev.hidden);
  const Tensor& cv = g.value(prev.cell);
  const Tensor& wx = g.value(w.input_weight);
  const Tensor& wh = g.value(w.hidden_weight);
  const Tensor& b = g.value(w.bias);
  require_vector(xv, "lstm input");
  require_vector(hv, "lstm hidden");
  require_matrix(wx, "lstm input weight");
  require_matrix(wh, "lstm hidden weight");
  const std::size_t H = hv.size();
  const std::size_t D = xv.size();
  if (cv.shape != hv.shape) throw DimensionError("lstm hidden " + shape_string(hv.shape) + " vs cell " + shape_string(cv.shape));
  if (wx.dim(0) != 4 * H || wx.dim(1) != D) {
    throw DimensionError("lstm input weight " + shape_string(wx.shape) + " incompatible with input " +
                         shape_string(xv.shape) + " and hidden size " + std::to_string(H));
  }
  if (wh.dim(0) != 4 * H || wh.dim(1) != H) throw DimensionError("lstm hidden weight " + shape_string(wh.shape) + " needs [4H x H]");
  if (b.shape != Shape{4 * H}) throw DimensionError("lstm bias " + shape_string(b.shape) + " needs [4H]");

  // gates: i, f, g, o activations, each H long
  std::vector<double> gates(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double* rx = wx.values.data() + r * D;
    const double* rh = wh.values.data() + r * H;
    double s = b.values[r];
    for (std::size_t c = 0; c < D; ++c) s += rx[c] * xv.values[c];
    for (std::size_t c = 0; c < H; ++c) s += rh[c] * hv.values[c];
    gates[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(s) : sigmoid(s);
  }
  Tensor out({2 * H});
  std::vector<double> cell_tanh(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double c = gates[H + k] * cv.values[k] + gates[k] * gates[2 * H + k];
    cell_tanh[k] = std::tanh(c);
    out.values[k] = gates[3 * H + k] * cell_tanh[k];
    out.values[H + k] = c;
  }

  const bool needs_grad = g.requires_grad({x, prev.hidden, prev.cell, w.input_weight, w.hidden_weight, w.bias});
  Var joint = g.record(
      std::move(out), needs_grad,
      [x, prev, w, H, D, gates = std::move(gates), cell_tanh = std::move(cell_tanh)](Graph& g, std::span<const double> up) {
        const Tensor& cv = g.value(prev.cell);
        std::vector<double> dz(4 * H);
        for (std::size_t k = 0; k < H; ++k) {
          const double i = gates[k], f = gates[H + k], cand = gates[2 * H + k], o = gates[3 * H + k];
          const double tc = cell_tanh[k];
          const double dh = up[k];
          const double dc = up[H + k] + dh * o * (1.0 - tc * tc);
          dz[k] = dc * cand * i * (1.0 - i);
          dz[H + k] = dc * cv.values[k] * f * (1.0 - f);
          dz[2 * H + k] = dc * i * (1.0 - cand * cand);
          dz[3 * H + k] = dh * tc * o * (1.0 - o);
          if (g.requires_grad(prev.cell)) g.grad(prev.cell)[k] += dc * f;
        }
        const Tensor& xv = g.value(x);
        const Tensor& hv = g.value(prev.hidden);
        if (g.requires_grad(w.bias)) {
          auto gb = g.grad(w.bias);
          for (std::size_t r = 0; r < 4 * H; ++r) gb[r] += dz[r];
        }
        if (g.requires_grad(w.input_weight)) {
          auto gw = g.grad(w.input_weight);
          for (std::size_t r = 0; r < 4 * H; ++r) {
            double* row = gw.data() + r * D;
            for (std::size_t c = 0; c < D; ++c) row[c] += dz[r] * xv.values[c];
          }
        }
        if (g.requires_grad(w.hidden_weight)) {
          auto gw = g.grad(w.hidden_weight);
          for (std::size_t r = 0; r < 4 * H; ++r) {
            double* row = gw.data() + r * H;
            for (std::size_t c = 0; c < H; ++c) row[c] += dz[r] * hv.values[c];
          }
        }
        if (g.requires_grad(x)) {
          const Tensor& wx = g.value(w.input_weight);
          auto gx = g.grad(x);
          for (std::size_t r = 0; r < 4 * H; ++r) {
            const double* row = wx.values.data() + r * D;
            for (std::size_t c = 0; c < D; ++c) gx[c] += dz[r] * row[c];
          }
        }
        if (g.requires_grad(prev.hidden)) {
          const Tensor& wh = g.value(w.hidden_weight);
          auto gh = g.grad(prev.hidden);
          for (std::size_t r = 0; r < 4 * H; ++r) {
            const double* row = wh.values.data() + r * H;
            for (std::size_t c = 0; c < H; ++c) gh[c] += dz[r] * row[c];
          }
        }
      });
  return {slice(g, joint, 0, H), slice(g, joint, H, H)};
}

Var conv1d_maxpool(Graph& g, Var embeds, const ConvWeights& w) {
  const Tensor& ev = g.value(embeds);
  require_matrix(ev, "conv input");
  if (w.widths.size() != w.kernels.size() || w.widths.size() != w.biases.size() || w.widths.empty()) {
    throw InternalError("conv weights need one kernel and bias per width");
  }
  const std::size_t n = ev.dim(0);
  const std::size_t E = ev.dim(1);
  const std::size_t max_width = *std::max_element(w.widths.begin(), w.widths.end());
  if (n < max_width) {
    throw InternalError("note of " + std::to_string(n) + " tokens is shorter than conv width " +
                        std::to_string(max_width) + "; pad notes before convolution");
  }

  std::size_t p = 0;
  bool needs_grad = g.requires_grad(embeds);
  for (std::size_t k = 0; k < w.widths.size(); ++k) {
    const Tensor& kern = g.value(w.kernels[k]);
    const Tensor& bias = g.value(w.biases[k]);
    require_matrix(kern, "conv kernel");
    if (kern.dim(1) != w.widths[k] * E) {
      throw DimensionError("conv kernel " + shape_string(kern.shape) + " does not match width " +
                           std::to_string(w.widths[k]) + " over embedding width " + std::to_string(E));
    }
    if (bias.shape != Shape{kern.dim(0)}) throw DimensionError("conv bias " + shape_string(bias.shape) + " vs kernel " + shape_string(kern.shape));
    p += kern.dim(0);
    needs_grad = needs_grad || g.requires_grad(w.kernels[k]) || g.requires_grad(w.biases[k]);
  }

  Tensor out({p});
  // argmax position per output; npos marks a pooled value of zero (relu inactive)
  std::vector<std::size_t> argmax(p, Var::npos);
  std::size_t o = 0;
  for (std::size_t k = 0; k < w.widths.size(); ++k) {
    const Tensor& kern = g.value(w.kernels[k]);
    const Tensor& bias = g.value(w.biases[k]);
    const std::size_t width = w.widths[k];
    const std::size_t span_len = width * E;
    const std::size_t positions = n - width + 1;
    for (std::size_t f = 0; f < kern.dim(0); ++f, ++o) {
      const double* row = kern.values.data() + f * span_len;
      double best = 0.0;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < positions; ++j) {
        const double* win = ev.values.data() + j * E;
        double s = bias.values[f];
        for (std::size_t c = 0; c < span_len; ++c) s += row[c] * win[c];
        if (j == 0 || s > best) {
          best = s;
          best_j = j;
        }
      }
      if (best > 0.0) {
        out.values[o] = best;
        argmax[o] = best_j;
      }
    }
  }

  return g.record(std::move(out), needs_grad, [embeds, w, argmax = std::move(argmax), E](Graph& g, std::span<const double> up) {
    const Tensor& ev = g.value(embeds);
    std::size_t o = 0;
    for (std::size_t k = 0; k < w.widths.size(); ++k) {
      const Tensor& kern = g.value(w.kernels[k]);
      const std::size_t span_len = w.widths[k] * E;
      const bool gk = g.requires_grad(w.kernels[k]);
      const bool gb = g.requires_grad(w.biases[k]);
      const bool ge = g.requires_grad(embeds);
      for (std::size_t f = 0; f < kern.dim(0); ++f, ++o) {
        if (argmax[o] == Var::npos || up[o] == 0.0) continue;
        const std::size_t j = argmax[o];
        const double* win = ev.values.data() + j * E;
        if (gb) g.grad(w.biases[k])[f] += up[o];
        if (gk) {
          double* grow = g.grad(w.kernels[k]).data() + f * span_len;
          for (std::size_t c = 0; c < span_len; ++c) grow[c] += up[o] * win[c];
        }
        if (ge) {
          const double* row = kern.values.data() + f * span_len;
          double* gwin = g.grad(embeds).data() + j * E;
          for (std::size_t c = 0; c < span_len; ++c) gwin[c] += up[o] * row[c];
        }
      }
    }
  });
}

Var dropout(Graph& g, Var input, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return input;
  const Tensor& x = g.value(input);
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> mask(x.size());
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = u(rng) < rate ? 0.0 : scale;
    out.values[i] = x.values[i] * mask[i];
  }
  return g.record(std::move(out), g.requires_grad(input), [input, mask = std::move(mask)](Graph& g, std::span<const double> up) {
    auto gx = g.grad(input);
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += up[i] * mask[i];
  });
}

Var weighted_sum(Graph& g, std::span<const Var> inputs, std::span<const double> weights, std::size_t size,
                 double divisor) {
  if (inputs.size() != weights.size()) throw InternalError("weighted_sum needs one weight per input");
  Tensor out({size});
  bool needs_grad = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& x = g.value(inputs[i]);
    if (x.size() != size) throw DimensionError("weighted_sum term " + shape_string(x.shape) + " vs expected [" + std::to_string(size) + "]");
    for (std::size_t k = 0; k < size; ++k) out.values[k] += weights[i] * x.values[k];
    needs_grad = needs_grad || g.requires_grad(inputs[i]);
  }
  if (divisor != 1.0) {
    for (auto& v : out.values) v /= divisor;
  }
  std::vector<Var> in(inputs.begin(), inputs.end());
  std::vector<double> ws(weights.begin(), weights.end());
  for (auto& w : ws) w /= divisor;
  return g.record(std::move(out), needs_grad, [in = std::move(in), ws = std::move(ws)](Graph& g, std::span<const double> up) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!g.requires_grad(in[i]) || ws[i] == 0.0) continue;
      auto gx = g.grad(in[i]);
      for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += ws[i] * up[k];
    }
  });
}

Var slice(Graph& g, Var input, std::size_t offset, std::size_t length) {
  const Tensor& x = g.value(input);
  if (offset + length > x.size()) throw DimensionError("slice past end of " + shape_string(x.shape));
  Tensor out({length}, std::vector<double>(x.values.begin() + static_cast<std::ptrdiff_t>(offset),
                                           x.values.begin() + static_cast<std::ptrdiff_t>(offset + length)));
  return g.record(std::move(out), g.requires_grad(input), [input, offset](Graph& g, std::span<const double> up) {
    auto gx = g.grad(input);
    for (std::size_t k = 0; k < up.size(); ++k) gx[offset + k] += up[k];
  });
}

Var sigmoid(Graph& g, Var logits) {
  const Tensor& x = g.value(logits);
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = sigmoid(x.values[i]);
  const Var self{g.size()};
  return g.record(std::move(out), g.requires_grad(logits), [logits, self](Graph& g, std::span<const double> up) {
    const Tensor& y = g.value(self);
    auto gx = g.grad(logits);
    for (std::size_t i = 0; i < up.size(); ++i) gx[i] += up[i] * y.values[i] * (1.0 - y.values[i]);
  });
}

Var softmax(Graph& g, Var logits) {
  const Tensor& x = g.value(logits);
  Tensor out(x.shape, softmax(x.values));
  const Var self{g.size()};
  return g.record(std::move(out), g.requires_grad(logits), [logits, self](Graph& g, std::span<const double> up) {
    const Tensor& y = g.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) dot += up[i] * y.values[i];
    auto gx = g.grad(logits);
    for (std::size_t i = 0; i < up.size(); ++i) gx[i] += y.values[i] * (up[i] - dot);
  });
}

Var sigmoid_bce(Graph& g, Var logit, int label) {
  const Tensor& x = g.value(logit);
  if (x.size() != 1) throw DimensionError("sigmoid_bce expects a scalar logit, got " + shape_string(x.shape));
  const double p = sigmoid(x.values[0]);
  const double loss = binary_ce(p, label);
  return g.record(Tensor({1}, {loss}), g.requires_grad(logit), [logit, p, label](Graph& g, std::span<const double> up) {
    g.grad(logit)[0] += up[0] * (p - label);
  });
}

Var softmax_ce(Graph& g, Var logits, int label) {
  const Tensor& x = g.value(logits);
  auto probs = softmax(x.values);
  const double loss = multiclass_ce(probs, label);
  return g.record(Tensor({1}, {loss}), g.requires_grad(logits),
                  [logits, probs = std::move(probs), label](Graph& g, std::span<const double> up) {
                    auto gx = g.grad(logits);
                    for (std::size_t i = 0; i < probs.size(); ++i) {
                      gx[i] += up[0] * (probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
                    }
                  });
}

Var mean(Graph& g, std::span<const Var> scalars) {
  if (scalars.empty()) throw InternalError("mean of no terms");
  double s = 0.0;
  bool needs_grad = false;
  for (auto v : scalars) {
    const Tensor& t = g.value(v);
    if (t.size() != 1) throw DimensionError("mean expects scalars, got " + shape_string(t.shape));
    s += t.values[0];
    needs_grad = needs_grad || g.requires_grad(v);
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  std::vector<Var> in(scalars.begin(), scalars.end());
  return g.record(Tensor({1}, {s * inv}), needs_grad, [in = std::move(in), inv](Graph& g, std::span<const double> up) {
    for (auto v : in) {
      if (g.requires_grad(v)) g.grad(v)[0] += up[0] * inv;
    }
  });
}

}  // namespace icumm
