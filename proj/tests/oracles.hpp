// Brute-force reference computations for tests. Each one follows the textbook
// definition directly and shares no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <vector>

namespace oracle {

inline double auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0, total = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        total += 1;
        good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return good / total;
}

// Enumerate every distinct score as a threshold, highest first.
inline double aucpr(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end(), std::greater<double>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double npos = 0;
  for (int v : y) npos += v;
  double area = 0, last_recall = 0;
  for (double t : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    double recall = tp / npos;
    area += (recall - last_recall) * tp / (tp + fp);
    last_recall = recall;
  }
  return area;
}

// kappa = 1 - sum w O / sum w E with w_ij = |i-j|/(C-1), built from explicit matrices.
inline double linear_kappa(const std::vector<int>& t, const std::vector<int>& p, int C) {
  std::vector<std::vector<double>> O(C, std::vector<double>(C, 0.0));
  for (std::size_t k = 0; k < t.size(); ++k) O[t[k]][p[k]] += 1;
  std::vector<double> rows(C, 0), cols(C, 0);
  double n = 0;
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j) {
      rows[i] += O[i][j];
      cols[j] += O[i][j];
      n += O[i][j];
    }
  double num = 0, den = 0;
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j) {
      double w = std::abs(i - j) / double(C - 1);
      num += w * O[i][j];
      den += w * rows[i] * cols[j] / n;
    }
  return 1.0 - num / den;
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double sample_std(const std::vector<double>& v) {
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace oracle
