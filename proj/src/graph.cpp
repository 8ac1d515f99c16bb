#include "icumm/graph.hpp"

#include "icumm/errors.hpp"

namespace icumm {

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(const ParamStore& store, std::size_t index) {
  Node n;
  n.external = &store[index];
  n.param_index = index;
  n.store = &store;
  n.requires_grad = track_gradients_;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::record(Tensor value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.value;
}

bool Graph::requires_grad(std::initializer_list<Var> vars) const {
  for (auto v : vars) {
    if (nodes_.at(v.id).requires_grad) return true;
  }
  return false;
}

std::span<double> Graph::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.empty()) n.grad.assign(value(v).size(), 0.0);
  return n.grad;
}

std::span<const double> Graph::grad_if_any(Var v) const { return nodes_.at(v.id).grad; }

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_string(value(loss).shape));
  }
  grad(loss)[0] += 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

void Graph::accumulate_into(ParamStore& store) const {
  for (const Node& n : nodes_) {
    if (n.param_index == Var::npos || n.grad.empty()) continue;
    if (n.store != &store) throw InternalError("graph parameter belongs to a different store");
    store.accumulate_grad(n.param_index, n.grad);
  }
}

}  // namespace icumm
