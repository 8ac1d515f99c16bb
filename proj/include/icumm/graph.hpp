#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "icumm/param_store.hpp"
#include "icumm/tensor.hpp"

namespace icumm {

/// Handle to a value recorded on a Graph.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Reverse-mode tape. Ops append nodes in evaluation order; backward() walks
/// them in reverse and each node pushes its upstream gradient to its inputs.
///
/// A Graph is single-use: build it for one forward pass, call backward() at
/// most once, then drain parameter gradients with accumulate_into().
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::span<const double> upstream)>;

  /// With `track_gradients` false, parameters are recorded as constants and
  /// no backward closures are kept (inference mode).
  explicit Graph(bool track_gradients = true) : track_gradients_(track_gradients) {}

  Var constant(Tensor value);
  /// Leaf that reads parameter `index` of `store` without copying it.
  Var parameter(const ParamStore& store, std::size_t index);
  /// Records an op output. `backward` may be empty when no input needs a gradient.
  Var record(Tensor value, bool requires_grad, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::initializer_list<Var> vars) const;
  /// Gradient buffer of `v`, zero-allocated on first access.
  std::span<double> grad(Var v);
  /// Gradient of `v` if any has flowed into it, else empty.
  std::span<const double> grad_if_any(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss)=1 and propagates. `loss` must hold one value.
  void backward(Var loss);
  /// Adds gradients of parameter leaves into the matching store entries.
  void accumulate_into(ParamStore& store) const;

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    std::size_t param_index = Var::npos;
    const ParamStore* store = nullptr;
    bool requires_grad = false;
    std::vector<double> grad;
    BackwardFn backward;
  };
  // deque: references to earlier nodes stay valid while new nodes are recorded.
  std::deque<Node> nodes_;
  bool track_gradients_ = true;
};

}  // namespace icumm
