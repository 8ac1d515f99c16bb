#include "icumm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

double eval_loss(const LossBuilder& build, const ParamStore& params) {
  Graph g;
  const double loss = g.value(build(g, params)).values.at(0);
  if (!std::isfinite(loss)) throw InternalError("gradient check hit a non-finite loss");
  return loss;
}

}  // namespace

GradCheckResult finite_difference_check(const LossBuilder& build, ParamStore& params, double h) {
  params.zero_grad();
  {
    Graph g;
    Var loss = build(g, params);
    if (!std::isfinite(g.value(loss).values.at(0))) throw InternalError("gradient check hit a non-finite loss");
    g.backward(loss);
    g.accumulate_into(params);
  }

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double> analytic = params[i].grad;
    std::vector<double> numeric(analytic.size());
    auto& values = params[i].values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double orig = values[k];
      values[k] = orig + h;
      const double up = eval_loss(build, params);
      values[k] = orig - h;
      const double down = eval_loss(build, params);
      values[k] = orig;
      numeric[k] = (up - down) / (2.0 * h);
    }

    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0, max_abs = 0.0, max_rel = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      const double d = std::abs(analytic[k] - numeric[k]);
      diff_sq += d * d;
      a_sq += analytic[k] * analytic[k];
      n_sq += numeric[k] * numeric[k];
      max_abs = std::max(max_abs, d);
      max_rel = std::max(max_rel, d / std::max(1e-8, std::abs(analytic[k]) + std::abs(numeric[k])));
    }
    const double norm_rel = std::sqrt(diff_sq) / std::max(1e-8, std::sqrt(a_sq) + std::sqrt(n_sq));
    result.per_parameter.push_back({params.name(i), max_rel, norm_rel, max_abs});
    result.max_relative_error = std::max(result.max_relative_error, max_rel);
    result.max_norm_error = std::max(result.max_norm_error, norm_rel);
  }
  params.clear_grad();
  return result;
}

}  // namespace icumm
