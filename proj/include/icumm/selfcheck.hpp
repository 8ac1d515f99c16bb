#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icumm/metrics.hpp"

namespace icumm {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured error
  double threshold = 0.0;  // pass iff value < threshold
  std::string detail;
};

struct SelfcheckOptions {
  bool quick = false;
  std::uint64_t seed = 7;
};

/// Gradient checks for every layer and every (task, variant) model at tiny
/// dimensions, then metric implementations against brute-force oracles.
std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& opts = {});

/// Tolerance for gradient checks.
inline constexpr double kGradTolerance = 1e-5;
/// Tolerance for metric oracles.
inline constexpr double kMetricTolerance = 1e-9;

// Reference implementations written straight from the definitions.

/// Mean over all positive/negative pairs of [pos > neg] + 0.5 [pos == neg].
double auroc_pairwise(const ScoredSet& set);
/// Sum over distinct thresholds (descending) of (recall step) x precision.
double aucpr_thresholds(const ScoredSet& set);
/// 1 - sum_ab |t_a - p_a| / (sum_a sum_b |t_a - p_b| / n), the linear kappa in item form.
double kappa_items(const std::vector<int>& truth, const std::vector<int>& pred);

}  // namespace icumm
