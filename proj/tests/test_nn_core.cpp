#include <doctest.h>

#include <cmath>
#include <random>

#include "icumm/errors.hpp"
#include "icumm/gradcheck.hpp"
#include "icumm/graph.hpp"
#include "icumm/layers.hpp"
#include "icumm/param_store.hpp"

using namespace icumm;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(s));
  for (auto& v : t.values) v = n(rng);
  return t;
}

std::vector<double> run_dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  Graph g(false);
  const Var out = dense(g, g.constant(x), g.constant(w), g.constant(b));
  return g.value(out).values;
}

}  // namespace

TEST_CASE("tensor construction and invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  t.at(1, 2) = 4.0;
  CHECK(t.values[5] == 4.0);
  CHECK_NOTHROW(t.check_invariants());
  t.values.pop_back();
  CHECK_THROWS_AS(t.check_invariants(), InternalError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimensionError);
  Tensor bad = Tensor::vector({1.0, NAN});
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("dense: identity, zero input, random oracle") {
  CHECK(run_dense(Tensor::vector({1, 2}), Tensor({2, 2}, {1, 0, 0, 1}), Tensor::vector({0, 0})) ==
        std::vector<double>{1, 2});
  CHECK(run_dense(Tensor::vector({0, 0}), Tensor({2, 2}, {5, -2, 7, 3}), Tensor::vector({3, -1})) ==
        std::vector<double>{3, -1});

  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({3}, rng), w = random_tensor({4, 3}, rng), b = random_tensor({4}, rng);
  const auto out = run_dense(x, w, b);
  REQUIRE(out.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    double expect = b.values[i];
    for (std::size_t j = 0; j < 3; ++j) expect += w.at(i, j) * x.values[j];
    CHECK(std::abs(out[i] - expect) < 1e-12);
  }

  Graph g(false);
  CHECK_THROWS_AS(dense(g, g.constant(Tensor::vector({1, 2})), g.constant(Tensor({2, 3})), g.constant(Tensor({2}))),
                  DimensionError);
}

TEST_CASE("lstm cell: zero case and forget saturation") {
  const std::size_t H = 3, D = 2;
  {
    Graph g(false);
    LstmWeights w{g.constant(Tensor({4 * H, D})), g.constant(Tensor({4 * H, H})), g.constant(Tensor({4 * H}))};
    const auto next = lstm_cell_step(g, g.constant(Tensor::vector({0.4, -1.0})), lstm_zero_state(g, H), w);
    CHECK(g.value(next.hidden).values == std::vector<double>(H, 0.0));
    CHECK(g.value(next.cell).values == std::vector<double>(H, 0.0));
  }
  {
    Graph g(false);
    Tensor bias({4 * H});
    for (std::size_t k = 0; k < H; ++k) {
      bias.values[k] = -50.0;         // input gate closed
      bias.values[H + k] = 50.0;      // forget gate open
    }
    LstmWeights w{g.constant(Tensor({4 * H, D})), g.constant(Tensor({4 * H, H})), g.constant(bias)};
    const LstmState prev{g.constant(Tensor::vector({0.1, 0.2, 0.3})), g.constant(Tensor::vector({1.5, -2.0, 0.25}))};
    const auto next = lstm_cell_step(g, g.constant(Tensor::vector({3.0, -3.0})), prev, w);
    const auto& c = g.value(next.cell).values;
    CHECK(c[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(c[2] == doctest::Approx(0.25).epsilon(1e-12));
  }
  Graph g(false);
  LstmWeights w{g.constant(Tensor({4 * H, D + 1})), g.constant(Tensor({4 * H, H})), g.constant(Tensor({4 * H}))};
  CHECK_THROWS_AS(lstm_cell_step(g, g.constant(Tensor::vector({1, 2})), lstm_zero_state(g, H), w), DimensionError);
}

TEST_CASE("conv1d maxpool: hand window, zeros, output size") {
  Graph g(false);
  ConvWeights w;
  w.widths = {2};
  w.kernels = {g.constant(Tensor({1, 2}, {1, 1}))};
  w.biases = {g.constant(Tensor({1}))};
  const Var out = conv1d_maxpool(g, g.constant(Tensor({3, 1}, {1, 2, 3})), w);
  CHECK(g.value(out).values == std::vector<double>{5.0});

  std::mt19937_64 rng(1);
  for (auto [E, F, expect] : {std::tuple{200ul, 256ul, 768ul}, std::tuple{200ul, 128ul, 384ul}}) {
    Graph h(false);
    ConvWeights cw;
    cw.widths = {2, 3, 4};
    for (std::size_t k : cw.widths) {
      cw.kernels.push_back(h.constant(random_tensor({F, k * E}, rng, 0.01)));
      cw.biases.push_back(h.constant(Tensor({F})));
    }
    const Var zero = conv1d_maxpool(h, h.constant(Tensor({10, E})), cw);
    CHECK(h.value(zero).size() == expect);
    CHECK(h.value(zero).values == std::vector<double>(expect, 0.0));
  }
}

TEST_CASE("cross-entropy values and label checks") {
  CHECK(binary_ce(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(binary_ce(1.0 - 1e-12, 1) < 1e-6);
  CHECK(binary_ce(0.9, 0) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(binary_ce(0.5, 2), ValidationError);

  CHECK(multiclass_ce(std::vector<double>(10, 0.1), 3) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(multiclass_ce(std::vector<double>{0, 1, 0}, 1) < 1e-12);
  CHECK(multiclass_ce(std::vector<double>{0.2, 0.3, 0.5}, 1) == doctest::Approx(-std::log(0.3)).epsilon(1e-12));
  CHECK_THROWS_AS(multiclass_ce(std::vector<double>{0.5, 0.5}, 2), ValidationError);
}

TEST_CASE("dropout: identity cases and statistics") {
  std::mt19937_64 rng(99);
  Graph g(false);
  const Var x = g.constant(Tensor(Shape{1000000}, std::vector<double>(1000000, 1.0)));
  CHECK(dropout(g, x, 0.0, true, rng).id == x.id);
  CHECK(dropout(g, x, 0.7, false, rng).id == x.id);
  CHECK_THROWS_AS(dropout(g, x, 1.0, true, rng), ValidationError);

  const auto& v = g.value(dropout(g, x, 0.2, true, rng)).values;
  double sum = 0, zeros = 0;
  for (double d : v) {
    sum += d;
    zeros += d == 0.0;
  }
  CHECK(std::abs(sum / v.size() - 1.0) < 0.01);
  CHECK(std::abs(zeros / v.size() - 0.2) < 0.01);
}

TEST_CASE("adam: zero gradient, first step, quadratic bowl") {
  ParamStore s;
  s.add("w", Tensor::vector({0.3, -0.7}));
  s.zero_grad();
  adam_update(s, {});
  CHECK(s.get("w").values == std::vector<double>{0.3, -0.7});

  ParamStore one;
  one.add("x", Tensor::vector({1.0}));
  one.accumulate_grad(0, {1.0});
  adam_update(one, {});
  CHECK(1.0 - one.get("x").values[0] == doctest::Approx(1e-3).epsilon(1e-4));

  ParamStore bowl;
  bowl.add("w", Tensor::vector({1.0}));
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  for (int i = 0; i < 500; ++i) {
    bowl.accumulate_grad(0, {2.0 * bowl.get("w").values[0]});
    adam_update(bowl, cfg);
  }
  CHECK(std::abs(bowl.get("w").values[0]) < 0.01);

  ParamStore missing;
  missing.add("lonely", Tensor::vector({1.0}));
  CHECK_THROWS_WITH_AS(adam_update(missing, {}), doctest::Contains("lonely"), InternalError);
}

TEST_CASE("weight decay adds wd * param to the gradient") {
  ParamStore a, b;
  a.add("w", Tensor::vector({2.0}));
  b.add("w", Tensor::vector({2.0}));
  a.accumulate_grad(0, {0.5});
  b.accumulate_grad(0, {0.5 + 0.1 * 2.0});
  AdamConfig with;
  with.weight_decay = 0.1;
  adam_update(a, with);
  adam_update(b, {});
  CHECK(a.get("w").values[0] == b.get("w").values[0]);
}

TEST_CASE("gradient clipping rescales to the global norm") {
  ParamStore s;
  s.add("a", Tensor::vector({0, 0}));
  s.add("b", Tensor::vector({0}));
  s.accumulate_grad(0, {3, 0});
  s.accumulate_grad(1, {4});
  CHECK(s.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(s.grad_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("finite differences: dense, chained lstm, conv") {
  std::mt19937_64 rng(12);
  {
    ParamStore p;
    p.add("w", random_tensor({3, 2}, rng));
    p.add("b", random_tensor({3}, rng));
    const Tensor x = random_tensor({2}, rng);
    const auto r = finite_difference_check(
        [&](Graph& g, const ParamStore& ps) {
          const Var y = dense(g, g.constant(x), g.parameter(ps, 0), g.parameter(ps, 1));
          return softmax_ce(g, y, 2);
        },
        p);
    CHECK(r.max_relative_error < 1e-6);
  }
  {
    const std::size_t H = 3, D = 2;
    ParamStore p;
    p.add("wx", random_tensor({4 * H, D}, rng, 0.5));
    p.add("wh", random_tensor({4 * H, H}, rng, 0.5));
    p.add("b", random_tensor({4 * H}, rng, 0.1));
    p.add("out", random_tensor({1, H}, rng));
    p.add("ob", Tensor({1}));
    std::vector<Tensor> xs;
    for (int t = 0; t < 5; ++t) xs.push_back(random_tensor({D}, rng));
    const auto r = finite_difference_check(
        [&](Graph& g, const ParamStore& ps) {
          LstmWeights w{g.parameter(ps, 0), g.parameter(ps, 1), g.parameter(ps, 2)};
          LstmState s = lstm_zero_state(g, H);
          for (const auto& x : xs) s = lstm_cell_step(g, g.constant(x), s, w);
          return sigmoid_bce(g, dense(g, s.hidden, g.parameter(ps, 3), g.parameter(ps, 4)), 1);
        },
        p);
    CHECK(r.max_relative_error < 1e-5);
  }
  {
    ParamStore p;
    p.add("k2", random_tensor({3, 2 * 4}, rng));
    p.add("b2", random_tensor({3}, rng, 0.1));
    p.add("out", random_tensor({1, 3}, rng));
    p.add("ob", Tensor({1}));
    const Tensor emb = random_tensor({7, 4}, rng);
    const auto r = finite_difference_check(
        [&](Graph& g, const ParamStore& ps) {
          ConvWeights cw{{2}, {g.parameter(ps, 0)}, {g.parameter(ps, 1)}};
          const Var f = conv1d_maxpool(g, g.constant(emb), cw);
          return sigmoid_bce(g, dense(g, f, g.parameter(ps, 2), g.parameter(ps, 3)), 0);
        },
        p);
    CHECK(r.max_relative_error < 1e-6);
  }
}

TEST_CASE("finite differences reject non-finite losses") {
  ParamStore p;
  p.add("w", Tensor::vector({1.0}));
  CHECK_THROWS_AS(finite_difference_check(
                      [](Graph& g, const ParamStore& ps) {
                        const Var w = g.parameter(ps, 0);
                        return g.record(Tensor::vector({INFINITY}), g.requires_grad(w),
                                        [](Graph&, std::span<const double>) {});
                      },
                      p),
                  InternalError);
}
