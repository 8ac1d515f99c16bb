#include "icumm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

void check_binary(const ScoredSet& set) {
  if (set.scores.size() != set.labels.size()) throw ValidationError("scores and labels differ in length");
  for (int y : set.labels) {
    if (y != 0 && y != 1) throw ValidationError("binary metric got label " + std::to_string(y));
  }
}

/// Indices sorted by descending score (stable).
std::vector<std::size_t> rank_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auroc(const ScoredSet& set) {
  check_binary(set);
  const auto idx = rank_desc(set.scores);
  // Walk tie groups from the top: each positive in a group beats every
  // negative below it and ties with the negatives inside it.
  double pos_total = 0.0, neg_total = 0.0;
  for (int y : set.labels) (y ? pos_total : neg_total) += 1.0;
  if (pos_total == 0.0 || neg_total == 0.0) throw UndefinedMetricError("AUROC needs both classes");

  double neg_above = 0.0, wins = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < idx.size() && set.scores[idx[j]] == set.scores[idx[i]]) {
      (set.labels[idx[j]] ? pos : neg) += 1.0;
      ++j;
    }
    wins += pos * (neg_total - neg_above - neg) + 0.5 * pos * neg;
    neg_above += neg;
    i = j;
  }
  return wins / (pos_total * neg_total);
}

double aucpr(const ScoredSet& set) {
  check_binary(set);
  const double pos_total = static_cast<double>(std::count(set.labels.begin(), set.labels.end(), 1));
  if (pos_total == 0.0) throw UndefinedMetricError("AUCPR needs at least one positive");
  const auto idx = rank_desc(set.scores);

  double tp = 0.0, fp = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double pos = 0.0;
    while (j < idx.size() && set.scores[idx[j]] == set.scores[idx[i]]) {
      if (set.labels[idx[j]]) {
        pos += 1.0;
        tp += 1.0;
      } else {
        fp += 1.0;
      }
      ++j;
    }
    if (pos > 0.0) ap += (tp / (tp + fp)) * (pos / pos_total);
    i = j;
  }
  return ap;
}

std::vector<std::vector<double>> confusion_matrix(std::span<const int> truth, std::span<const int> pred, int classes) {
  if (truth.size() != pred.size()) throw ValidationError("truth and prediction differ in length");
  if (classes < 1) throw ValidationError("need at least one class");
  std::vector<std::vector<double>> m(static_cast<std::size_t>(classes), std::vector<double>(static_cast<std::size_t>(classes), 0.0));
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < 0 || truth[k] >= classes || pred[k] < 0 || pred[k] >= classes) {
      throw ValidationError("class index outside [0, " + std::to_string(classes) + ")");
    }
    m[static_cast<std::size_t>(truth[k])][static_cast<std::size_t>(pred[k])] += 1.0;
  }
  return m;
}

double linear_weighted_kappa(std::span<const int> truth, std::span<const int> pred, int classes) {
  if (truth.empty()) throw ValidationError("kappa needs at least one pair");
  if (classes < 2) throw UndefinedMetricError("kappa needs at least two classes");
  const auto observed = confusion_matrix(truth, pred, classes);
  const auto C = static_cast<std::size_t>(classes);
  std::vector<double> row(C, 0.0), col(C, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      row[i] += observed[i][j];
      col[j] += observed[i][j];
    }
  }
  const double n = static_cast<double>(truth.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const double w = std::abs(static_cast<double>(i) - static_cast<double>(j)) / static_cast<double>(C - 1);
      num += w * observed[i][j];
      den += w * row[i] * col[j] / n;
    }
  }
  if (den == 0.0) throw UndefinedMetricError("kappa undefined: expected disagreement is zero");
  return 1.0 - num / den;
}

MetricsReport aggregate_seeds(std::span<const double> values) {
  MetricsReport r;
  r.values.assign(values.begin(), values.end());
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double sq = 0.0;
    for (double v : values) sq += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace icumm
