#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "icumm/tensor.hpp"

namespace icumm {

/// Named trainable tensors plus their Adam moment accumulators.
///
/// Parameters keep their insertion order; that order is the iteration order
/// for optimisation, clipping and checkpointing.
class ParamStore {
 public:
  /// Registers a parameter; throws ValidationError if the name is taken.
  std::size_t add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  std::size_t size() const { return params_.size(); }

  Tensor& operator[](std::size_t i) { return params_.at(i).value; }
  const Tensor& operator[](std::size_t i) const { return params_.at(i).value; }
  Tensor& get(std::string_view name) { return params_[index(name)].value; }
  const Tensor& get(std::string_view name) const { return params_[index(name)].value; }
  const std::string& name(std::size_t i) const { return params_.at(i).name; }
  std::vector<std::string> names() const;

  std::vector<double>& adam_m(std::size_t i) { return params_.at(i).adam_m; }
  std::vector<double>& adam_v(std::size_t i) { return params_.at(i).adam_v; }
  const std::vector<double>& adam_m(std::size_t i) const { return params_.at(i).adam_m; }
  const std::vector<double>& adam_v(std::size_t i) const { return params_.at(i).adam_v; }

  std::size_t step_count() const { return step_count_; }
  void increment_step() { ++step_count_; }

  /// Gives every parameter an all-zero gradient buffer.
  void zero_grad();
  /// Drops all gradient buffers (the "absent" state).
  void clear_grad();
  /// Adds `g` into parameter i's gradient, allocating it if absent.
  void accumulate_grad(std::size_t i, const std::vector<double>& g);
  void scale_grad(double factor);
  /// Euclidean norm over all present gradients.
  double grad_norm() const;
  /// Rescales gradients so their global norm is at most `max_norm`. Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::size_t parameter_count() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
  };
  std::vector<Entry> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t step_count_ = 0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Classic L2: added to the loss gradient as weight_decay * param.
  double weight_decay = 0.0;
};

/// One bias-corrected Adam step over every parameter, then clears gradients.
/// Throws InternalError naming the first parameter without a gradient.
void adam_update(ParamStore& store, const AdamConfig& cfg);

}  // namespace icumm
