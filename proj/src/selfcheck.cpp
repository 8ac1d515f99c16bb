#include "icumm/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "icumm/errors.hpp"
#include "icumm/fixtures.hpp"
#include "icumm/gradcheck.hpp"
#include "icumm/layers.hpp"
#include "icumm/models.hpp"
#include "icumm/text_features.hpp"

namespace icumm {

double auroc_pairwise(const ScoredSet& set) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < set.scores.size(); ++a) {
    if (set.labels[a] != 1) continue;
    for (std::size_t b = 0; b < set.scores.size(); ++b) {
      if (set.labels[b] != 0) continue;
      pairs += 1.0;
      if (set.scores[a] > set.scores[b]) wins += 1.0;
      else if (set.scores[a] == set.scores[b]) wins += 0.5;
    }
  }
  if (pairs == 0.0) throw UndefinedMetricError("AUROC needs both classes");
  return wins / pairs;
}

double aucpr_thresholds(const ScoredSet& set) {
  std::set<double, std::greater<>> thresholds(set.scores.begin(), set.scores.end());
  double positives = 0.0;
  for (int y : set.labels) positives += y;
  if (positives == 0.0) throw UndefinedMetricError("AUCPR needs a positive");
  double prev_recall = 0.0, ap = 0.0;
  for (double s : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t k = 0; k < set.scores.size(); ++k) {
      if (set.scores[k] >= s) {
        predicted += 1.0;
        tp += set.labels[k];
      }
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

double kappa_items(const std::vector<int>& truth, const std::vector<int>& pred) {
  const double n = static_cast<double>(truth.size());
  double observed = 0.0, expected = 0.0;
  for (std::size_t a = 0; a < truth.size(); ++a) {
    observed += std::abs(truth[a] - pred[a]);
    for (std::size_t b = 0; b < truth.size(); ++b) expected += std::abs(truth[a] - pred[b]);
  }
  expected /= n;
  if (expected == 0.0) throw UndefinedMetricError("kappa undefined");
  return 1.0 - observed / expected;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = n(rng);
  return t;
}

/// Scalar loss from a vector node: BCE of a fixed random projection, so every
/// coordinate gets a distinct nonzero weight.
Var probe(Graph& g, Var v, std::uint64_t seed) {
  const std::size_t n = g.value(v).size();
  std::mt19937_64 rng(seed);
  Var w = g.constant(random_tensor({1, n}, rng));
  Var b = g.constant(Tensor({1}, {0.1}));
  return sigmoid_bce(g, dense(g, v, w, b), 1);
}

Var p(Graph& g, const ParamStore& s, const char* name) { return g.parameter(s, s.index(name)); }

CheckResult grad_check(const std::string& name, const LossBuilder& build, ParamStore& params) {
  const auto r = finite_difference_check(build, params, 1e-5);
  CheckResult c{"grad " + name, r.max_relative_error < kGradTolerance, r.max_relative_error, kGradTolerance, {}};
  for (const auto& pe : r.per_parameter) {
    if (!c.detail.empty()) c.detail += ", ";
    c.detail += pe.name + " " + fmt("%.2e", pe.relative_error);
  }
  return c;
}

std::vector<CheckResult> layer_checks(std::mt19937_64& rng) {
  std::vector<CheckResult> out;

  {
    ParamStore s;
    s.add("x", random_tensor({2}, rng));
    s.add("w", random_tensor({3, 2}, rng));
    s.add("b", random_tensor({3}, rng));
    out.push_back(grad_check("dense", [](Graph& g, const ParamStore& ps) {
      return probe(g, dense(g, p(g, ps, "x"), p(g, ps, "w"), p(g, ps, "b")), 11);
    }, s));
  }
  {
    ParamStore s;
    s.add("x", random_tensor({4}, rng));
    s.add("w1", random_tensor({2, 4}, rng));
    s.add("z", random_tensor({3}, rng));
    s.add("w2", random_tensor({2, 3}, rng));
    s.add("b", random_tensor({2}, rng));
    out.push_back(grad_check("fused_dense", [](Graph& g, const ParamStore& ps) {
      const Var in[] = {p(g, ps, "x"), p(g, ps, "z")};
      const Var w[] = {p(g, ps, "w1"), p(g, ps, "w2")};
      return probe(g, fused_dense(g, in, w, p(g, ps, "b")), 12);
    }, s));
  }
  {
    const std::size_t H = 4, D = 3, steps = 5;
    ParamStore s;
    s.add("xs", random_tensor({steps * D}, rng));
    s.add("wx", random_tensor({4 * H, D}, rng, 0.5));
    s.add("wh", random_tensor({4 * H, H}, rng, 0.5));
    s.add("b", random_tensor({4 * H}, rng, 0.5));
    out.push_back(grad_check("lstm x5", [=](Graph& g, const ParamStore& ps) {
      const LstmWeights w{p(g, ps, "wx"), p(g, ps, "wh"), p(g, ps, "b")};
      LstmState st = lstm_zero_state(g, H);
      Var xs = p(g, ps, "xs");
      for (std::size_t t = 0; t < steps; ++t) st = lstm_cell_step(g, slice(g, xs, t * D, D), st, w);
      const Var in[] = {st.hidden, st.cell};
      Var wc = g.constant(Tensor({H, H}, std::vector<double>(H * H, 0.25)));
      const Var ws[] = {g.constant(Tensor({H, H}, std::vector<double>(H * H, 0.5))), wc};
      return probe(g, fused_dense(g, in, ws, g.constant(Tensor({H}))), 13);
    }, s));
  }
  {
    const std::size_t n = 7, E = 5, F = 2;
    ParamStore s;
    s.add("embeds", random_tensor({n, E}, rng));
    for (std::size_t w : {2, 3}) {
      s.add(conv_kernel_name(w), random_tensor({F, w * E}, rng, 0.5));
      s.add(conv_bias_name(w), random_tensor({F}, rng, 0.5));
    }
    out.push_back(grad_check("conv1d_maxpool", [](Graph& g, const ParamStore& ps) {
      const std::size_t widths[] = {2, 3};
      return probe(g, conv1d_maxpool(g, p(g, ps, "embeds"), bind_conv(g, ps, widths)), 14);
    }, s));
  }
  {
    ParamStore s;
    s.add("x", random_tensor({6}, rng));
    out.push_back(grad_check("dropout", [](Graph& g, const ParamStore& ps) {
      std::mt19937_64 mask(99);
      return probe(g, dropout(g, p(g, ps, "x"), 0.3, true, mask), 15);
    }, s));
  }
  {
    ParamStore s;
    s.add("x", random_tensor({5}, rng));
    out.push_back(grad_check("sigmoid", [](Graph& g, const ParamStore& ps) {
      return probe(g, sigmoid(g, p(g, ps, "x")), 16);
    }, s));
  }
  {
    ParamStore s;
    s.add("x", random_tensor({5}, rng));
    out.push_back(grad_check("softmax", [](Graph& g, const ParamStore& ps) {
      return probe(g, softmax(g, p(g, ps, "x")), 17);
    }, s));
  }
  {
    ParamStore s;
    s.add("logit", random_tensor({1}, rng));
    s.add("logits", random_tensor({10}, rng));
    out.push_back(grad_check("cross entropy", [](Graph& g, const ParamStore& ps) {
      const Var terms[] = {sigmoid_bce(g, p(g, ps, "logit"), 1), softmax_ce(g, p(g, ps, "logits"), 3)};
      return mean(g, terms);
    }, s));
  }
  {
    ParamStore s;
    s.add("z1", random_tensor({4}, rng));
    s.add("z2", random_tensor({4}, rng));
    s.add("z3", random_tensor({4}, rng));
    out.push_back(grad_check("decay aggregation", [](Graph& g, const ParamStore& ps) {
      const Var z[] = {p(g, ps, "z1"), p(g, ps, "z2"), p(g, ps, "z3")};
      const int ct[] = {1, 4, 9};
      return probe(g, aggregate_note_features(g, z, ct, 6, 0.1, 4), 18);
    }, s));
  }
  return out;
}

std::vector<CheckResult> model_checks(std::mt19937_64& rng) {
  std::vector<CheckResult> out;
  const std::size_t D = 3, E = 5, vocab = 12;
  const EmbeddingTable table = random_table(vocab, E, rng);
  for (Task task : {Task::ihm, Task::decomp, Task::los}) {
    const int hours = task == Task::ihm ? 50 : 14;
    const Episode e = random_episode("check", hours, D, 3, vocab, task == Task::decomp, rng);
    for (Variant variant :
         {Variant::baseline, Variant::multimodal_cnn, Variant::multimodal_avgwe, Variant::text_only}) {
      ModelConfig cfg = ModelConfig::defaults(task, variant, D, E);
      cfg.hidden = 4;
      cfg.filters = 2;
      cfg.widths = {2, 3};
      cfg.decay_lambda = 0.05;
      cfg.dropout = 0.2;
      Model model(cfg, rng());
      out.push_back(grad_check(std::string(to_string(task)) + " " + std::string(to_string(variant)),
                               [&](Graph& g, const ParamStore& ps) {
                                 std::mt19937_64 mask(5);
                                 ForwardContext ctx{true, &mask};
                                 ForwardOutput fo;
                                 switch (variant) {
                                   case Variant::baseline: fo = baseline_forward(g, e, ps, cfg, ctx); break;
                                   case Variant::text_only: fo = text_only_forward(g, e, table, ps, cfg, ctx); break;
                                   default:
                                     fo = task == Task::ihm ? ihm_multimodal_forward(g, e, table, ps, cfg, ctx)
                                                            : seq_multimodal_forward(g, e, table, ps, cfg, ctx);
                                 }
                                 return task_loss(g, fo, e.labels, task);
                               },
                               model.params()));
    }
  }
  return out;
}

CheckResult metric_check(const std::string& name, double got, double want) {
  const double err = std::abs(got - want);
  return {name, err < kMetricTolerance, err, kMetricTolerance, "got " + fmt("%.12g", got) + ", want " + fmt("%.12g", want)};
}

std::vector<CheckResult> metric_checks(std::mt19937_64& rng, std::size_t instances) {
  std::vector<CheckResult> out;
  const ScoredSet fixed{{0.8, 0.7, 0.6, 0.5}, {1, 0, 1, 0}};
  out.push_back(metric_check("auroc fixed case", auroc(fixed), 0.75));
  out.push_back(metric_check("aucpr fixed case", aucpr(fixed), 5.0 / 6.0));

  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_int_distribution<int> coarse(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_roc = 0.0, worst_pr = 0.0, worst_kappa = 0.0;
  for (std::size_t k = 0; k < instances; ++k) {
    const int n = size(rng);
    ScoredSet set;
    const bool ties = k % 2 == 0;
    for (int i = 0; i < n; ++i) {
      set.scores.push_back(ties ? coarse(rng) / 10.0 : u(rng));
      set.labels.push_back(u(rng) < 0.4 ? 1 : 0);
    }
    set.labels[0] = 1;
    set.labels[1] = 0;
    worst_roc = std::max(worst_roc, std::abs(auroc(set) - auroc_pairwise(set)));
    worst_pr = std::max(worst_pr, std::abs(aucpr(set) - aucpr_thresholds(set)));

    const int classes = std::uniform_int_distribution<int>(2, 10)(rng);
    std::uniform_int_distribution<int> cls(0, classes - 1);
    std::vector<int> truth, pred;
    for (int i = 0; i < n; ++i) {
      truth.push_back(cls(rng));
      pred.push_back(cls(rng));
    }
    truth[0] = 0;
    truth[1] = classes - 1;
    worst_kappa = std::max(worst_kappa, std::abs(linear_weighted_kappa(truth, pred, classes) - kappa_items(truth, pred)));
  }
  const std::string suffix = " vs oracle (" + std::to_string(instances) + " instances)";
  out.push_back({"auroc" + suffix, worst_roc < kMetricTolerance, worst_roc, kMetricTolerance, {}});
  out.push_back({"aucpr" + suffix, worst_pr < kMetricTolerance, worst_pr, kMetricTolerance, {}});
  out.push_back({"kappa" + suffix, worst_kappa < kMetricTolerance, worst_kappa, kMetricTolerance, {}});
  return out;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<CheckResult> out = layer_checks(rng);
  auto models = model_checks(rng);
  out.insert(out.end(), models.begin(), models.end());
  auto metrics = metric_checks(rng, opts.quick ? 50 : 200);
  out.insert(out.end(), metrics.begin(), metrics.end());
  return out;
}

}  // namespace icumm
