#pragma once

#include <optional>
#include <span>
#include <vector>

namespace icumm {

/// Scores with binary (0/1) or class-index labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Probability that a random positive outranks a random negative; ties count 1/2.
/// Throws UndefinedMetricError unless both classes are present.
double auroc(const ScoredSet& set);

/// Average precision with step interpolation. Equal scores form one threshold.
/// Throws UndefinedMetricError when there are no positives.
double aucpr(const ScoredSet& set);

/// Counts[i][j]: true class i predicted as j.
std::vector<std::vector<double>> confusion_matrix(std::span<const int> truth, std::span<const int> pred, int classes);

/// Cohen's kappa with linear disagreement weights |i-j|/(C-1).
double linear_weighted_kappa(std::span<const int> truth, std::span<const int> pred, int classes);

struct MetricsReport {
  std::vector<double> values;
  double mean = 0.0;
  std::optional<double> stddev;  // sample (n-1) deviation, absent for n < 2
};

MetricsReport aggregate_seeds(std::span<const double> values);

}  // namespace icumm
