#include "icumm/param_store.hpp"

#include <cmath>

#include "icumm/errors.hpp"

namespace icumm {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ValidationError("duplicate parameter name '" + name + "'");
  const auto i = params_.size();
  const auto n = value.size();
  index_.emplace(name, i);
  params_.push_back(Entry{std::move(name), std::move(value), std::vector<double>(n, 0.0),
                          std::vector<double>(n, 0.0)});
  return i;
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParamStore::index(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.value.grad.assign(p.value.size(), 0.0);
}

void ParamStore::clear_grad() {
  for (auto& p : params_) {
    p.value.grad.clear();
    p.value.grad.shrink_to_fit();
  }
}

void ParamStore::accumulate_grad(std::size_t i, const std::vector<double>& g) {
  auto& t = params_.at(i).value;
  if (g.size() != t.size()) {
    throw DimensionError("gradient for '" + params_[i].name + "' has " + std::to_string(g.size()) +
                         " entries, parameter has " + std::to_string(t.size()));
  }
  if (t.grad.empty()) {
    t.grad = g;
    return;
  }
  for (std::size_t k = 0; k < g.size(); ++k) t.grad[k] += g[k];
}

void ParamStore::scale_grad(double factor) {
  for (auto& p : params_) {
    for (auto& g : p.value.grad) g *= factor;
  }
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (double g : p.value.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) scale_grad(max_norm / norm);
  return norm;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void adam_update(ParamStore& store, const AdamConfig& cfg) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].has_grad()) throw InternalError("parameter '" + store.name(i) + "' has no gradient");
  }
  store.increment_step();
  const auto t = static_cast<double>(store.step_count());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < store.size(); ++i) {
    Tensor& p = store[i];
    auto& m = store.adam_m(i);
    auto& v = store.adam_v(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k] + cfg.weight_decay * p.values[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p.values[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  store.clear_grad();
}

}  // namespace icumm
