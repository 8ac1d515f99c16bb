#include <doctest.h>

#include <cmath>
#include <random>

#include "icumm/errors.hpp"
#include "icumm/metrics.hpp"
#include "oracles.hpp"

using namespace icumm;

TEST_CASE("auroc examples") {
  CHECK(auroc({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
  CHECK(auroc({{0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}}) == 0.5);
  CHECK(auroc({{0.8, 0.7, 0.6, 0.5}, {1, 0, 1, 0}}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1, 1}}), UndefinedMetricError);
  CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1, 2}}), ValidationError);
  CHECK_THROWS_AS(auroc({{0.1}, {1, 0}}), ValidationError);
}

TEST_CASE("aucpr examples") {
  CHECK(aucpr({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
  CHECK(aucpr({{0.9, 0.1}, {1, 0}}) == 1.0);
  CHECK(aucpr({{0.8, 0.7, 0.6, 0.5}, {1, 0, 1, 0}}) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  // A tie group counts as one threshold.
  CHECK(aucpr({{0.5, 0.5, 0.1}, {1, 0, 1}}) == doctest::Approx(oracle::aucpr({0.5, 0.5, 0.1}, {1, 0, 1})));
  CHECK_THROWS_AS(aucpr({{0.1, 0.2}, {0, 0}}), UndefinedMetricError);
}

TEST_CASE("kappa examples") {
  const std::vector<int> t{0, 0, 1, 2, 2, 2}, p{0, 1, 1, 2, 2, 1};
  CHECK(linear_weighted_kappa(t, t, 3) == 1.0);
  CHECK(std::abs(linear_weighted_kappa(t, p, 3) - oracle::linear_kappa(t, p, 3)) < 1e-12);
  // Hand count: disagreement 2/6 against expected 32/36.
  CHECK(linear_weighted_kappa(t, p, 3) == doctest::Approx(1.0 - (2.0 / 6.0) / (32.0 / 36.0)).epsilon(1e-12));

  const std::vector<int> same{1, 1, 1};
  CHECK_THROWS_AS(linear_weighted_kappa(same, same, 3), UndefinedMetricError);
  const std::vector<int> out_of_range{0, 3};
  CHECK_THROWS_AS(linear_weighted_kappa(out_of_range, out_of_range, 3), ValidationError);

  const auto cm = confusion_matrix(t, p, 3);
  CHECK(cm[2][1] == 1);
  CHECK(cm[2][2] == 2);
}

TEST_CASE("random instances agree with oracles") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(u(rng) * 49);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      s.push_back(std::round(u(rng) * 10) / 10);
      y.push_back(u(rng) < 0.4);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(auroc({s, y}) - oracle::auroc(s, y)) < 1e-9);
    CHECK(std::abs(aucpr({s, y}) - oracle::aucpr(s, y)) < 1e-9);

    const int C = 2 + k % 9;
    std::vector<int> t, p;
    for (int i = 0; i < n; ++i) {
      t.push_back(static_cast<int>(u(rng) * C));
      p.push_back(static_cast<int>(u(rng) * C));
    }
    t[0] = 0;
    t[1] = C - 1;
    CHECK(std::abs(linear_weighted_kappa(t, p, C) - oracle::linear_kappa(t, p, C)) < 1e-9);
  }
}

TEST_CASE("metric invariances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> s, warped, negated;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      s.push_back(u(rng));
      warped.push_back(std::exp(3.0 * s.back()) - 7.0);
      negated.push_back(-s.back());
      y.push_back(i % 3 == 0);
    }
    CHECK(auroc({warped, y}) == auroc({s, y}));
    CHECK(aucpr({warped, y}) == aucpr({s, y}));
    CHECK(auroc({s, y}) + auroc({negated, y}) == doctest::Approx(1.0).epsilon(1e-12));

    const int C = 10;
    std::vector<int> t, p, tr, pr;
    for (int i = 0; i < 30; ++i) {
      t.push_back(static_cast<int>(u(rng) * C));
      p.push_back(std::min(C - 1, t.back() + static_cast<int>(u(rng) * 3)));
      tr.push_back(C - 1 - t.back());
      pr.push_back(C - 1 - p.back());
    }
    CHECK(linear_weighted_kappa(t, p, C) == doctest::Approx(linear_weighted_kappa(tr, pr, C)).epsilon(1e-12));
  }
}

TEST_CASE("aucpr of random scores sits near the positive rate") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 10000; ++i) {
    s.push_back(u(rng));
    y.push_back(u(rng) < 0.2);
  }
  CHECK(std::abs(aucpr({s, y}) - 0.2) < 0.05);
  // Scores that order by the label beat the positive rate.
  std::vector<double> ordered;
  for (int v : y) ordered.push_back(v + 0.5 * u(rng));
  CHECK(aucpr({ordered, y}) >= 0.2);
}

TEST_CASE("aggregate_seeds") {
  const std::vector<double> ones(5, 1.0);
  const auto a = aggregate_seeds(ones);
  CHECK(a.mean == 1.0);
  CHECK(a.stddev == 0.0);
  const std::vector<double> pair{0.0, 1.0};
  const auto b = aggregate_seeds(pair);
  CHECK(b.mean == 0.5);
  CHECK(*b.stddev == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  const std::vector<double> single{0.3};
  CHECK_FALSE(aggregate_seeds(single).stddev.has_value());

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.6, 0.1);
  std::vector<double> v;
  for (int i = 0; i < 5; ++i) v.push_back(n(rng));
  const auto c = aggregate_seeds(v);
  CHECK(std::abs(c.mean - oracle::mean(v)) < 1e-12);
  CHECK(std::abs(*c.stddev - oracle::sample_std(v)) < 1e-12);
  CHECK(c.values == v);
}
