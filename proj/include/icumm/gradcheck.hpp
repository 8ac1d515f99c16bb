#pragma once

#include <functional>
#include <string>
#include <vector>

#include "icumm/graph.hpp"
#include "icumm/param_store.hpp"

namespace icumm {

/// Builds a scalar loss on `g` from the current values in `params`. Must be
/// deterministic: the same parameters give the same loss, bit for bit.
using LossBuilder = std::function<Var(Graph& g, const ParamStore& params)>;

struct ParamGradError {
  std::string name;
  double relative_error = 0.0;  // max_k |a_k - n_k| / max(1e-8, |a_k| + |n_k|)
  double norm_error = 0.0;      // ||a - n|| / max(1e-8, ||a|| + ||n||)
  double max_abs_error = 0.0;   // max_k |a_k - n_k|
};

struct GradCheckResult {
  double max_relative_error = 0.0;  // worst coordinate over all parameters
  double max_norm_error = 0.0;
  std::vector<ParamGradError> per_parameter;
};

/// Compares backprop gradients against central differences with step `h`
/// for every coordinate of every parameter. Parameters are restored on return.
/// Throws InternalError if any perturbed loss is non-finite.
GradCheckResult finite_difference_check(const LossBuilder& build, ParamStore& params, double h = 1e-5);

}  // namespace icumm
