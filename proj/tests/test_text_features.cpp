#include <doctest.h>

#include <cmath>
#include <random>

#include "icumm/errors.hpp"
#include "icumm/text_features.hpp"

using namespace icumm;

namespace {

EmbeddingTable table3() {
  EmbeddingTable t(2);
  t.add("a", std::vector<double>{1, 2});
  t.add("b", std::vector<double>{3, -4});
  t.add("c", std::vector<double>{0.5, 0.5});
  return t;
}

ParamStore conv_params(std::size_t E, std::size_t F, std::vector<std::size_t> widths, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ParamStore p;
  for (std::size_t w : widths) {
    Tensor k({F, w * E});
    for (auto& v : k.values) v = n(rng);
    Tensor b({F});
    for (auto& v : b.values) v = n(rng);
    p.add(conv_kernel_name(w), k);
    p.add(conv_bias_name(w), b);
  }
  return p;
}

}  // namespace

TEST_CASE("pad_tokens") {
  const std::vector<TokenId> ids{4, 5};
  CHECK(pad_tokens(ids, 4) == std::vector<TokenId>{4, 5, 0, 0});
  CHECK(pad_tokens(ids, 1) == ids);
  CHECK(pad_tokens({}, 3) == std::vector<TokenId>{0, 0, 0});
}

TEST_CASE("concat_notes") {
  const ClinicalNote a{3, {1, 2}}, b{4, {3}};
  CHECK(concat_notes(std::vector<ClinicalNote>{a}) == a);
  CHECK(concat_notes(std::vector<ClinicalNote>{a, b}) == ClinicalNote{4, {1, 2, 3}});
  const ClinicalNote late{5, {7}}, early{2, {8, 9}};
  CHECK(concat_notes(std::vector<ClinicalNote>{late, early}).token_ids == std::vector<TokenId>{8, 9, 7});
  CHECK_THROWS_AS(concat_notes(std::vector<ClinicalNote>{}), ValidationError);
}

TEST_CASE("decay_weight") {
  CHECK(decay_weight(7, 7, 0.01) == 1.0);
  CHECK(decay_weight(500, 1, 0.0) == 1.0);
  CHECK(decay_weight(101, 1, 0.01) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(decay_weight(101, 1, 0.01) == doctest::Approx(0.36788).epsilon(1e-5));
  CHECK_THROWS_AS(decay_weight(3, 4, 0.01), ValidationError);
}

TEST_CASE("visible_notes") {
  const std::vector<int> cts{1, 3, 3, 9};
  const auto v = visible_notes(cts, 3, 0.5);
  CHECK(v.index == std::vector<std::size_t>{0, 1, 2});
  CHECK(v.weight[0] == doctest::Approx(std::exp(-1.0)));
  CHECK(v.weight[2] == 1.0);
}

TEST_CASE("aggregate_note_features") {
  const Tensor v = Tensor::vector({0.25, -1.5});
  CHECK(aggregate_note_features(std::vector<NoteFeature>{{4, v}, {4, v}}, 4, 0.01, 2).values == v.values);
  CHECK(aggregate_note_features(std::vector<NoteFeature>{}, 4, 0.01, 5).values == std::vector<double>(5, 0.0));

  // Independent scalar evaluation of the decayed mean.
  const std::vector<NoteFeature> f{{1, Tensor::vector({1, 0})}, {101, Tensor::vector({0, 1})}};
  const auto z = aggregate_note_features(f, 101, 0.01, 2);
  const double w1 = std::exp(-0.01 * 100.0), w2 = 1.0;
  CHECK(z.values[0] == doctest::Approx((1.0 * w1 + 0.0 * w2) / 2.0).epsilon(1e-14));
  CHECK(z.values[1] == doctest::Approx((0.0 * w1 + 1.0 * w2) / 2.0).epsilon(1e-14));
  CHECK(z.values[0] == doctest::Approx(0.18394).epsilon(1e-4));

  // Not weight-normalised: one old note is shrunk, not restored to full size.
  const auto old = aggregate_note_features(std::vector<NoteFeature>{{1, Tensor::vector({2, 2})}}, 51, 0.02, 2);
  CHECK(old.values[0] == doctest::Approx(2.0 * std::exp(-1.0)));

  // Notes after t are ignored.
  const auto early = aggregate_note_features(std::vector<NoteFeature>{{2, v}, {9, Tensor::vector({100, 100})}}, 5, 0.1, 2);
  CHECK(early.values == aggregate_note_features(std::vector<NoteFeature>{{2, v}}, 5, 0.1, 2).values);

  Graph g(false);
  const Var a = g.constant(Tensor::vector({1, 0})), b = g.constant(Tensor::vector({0, 1}));
  const std::vector<Var> feats{a, b};
  const std::vector<int> cts{1, 101};
  CHECK(g.value(aggregate_note_features(g, feats, cts, 101, 0.01, 2)).values == z.values);
}

TEST_CASE("avg_word_embedding") {
  const auto t = table3();
  const std::vector<TokenId> one{1}, two{1, 2}, oov{0, 0}, mixed{2, 0};
  CHECK(avg_word_embedding(one, t).values == std::vector<double>{1, 2});
  CHECK(avg_word_embedding(two, t).values == std::vector<double>{2, -1});
  CHECK(avg_word_embedding(oov, t).values == std::vector<double>{0, 0});
  CHECK(avg_word_embedding({}, t).values == std::vector<double>{0, 0});
  CHECK(avg_word_embedding(mixed, t).values == std::vector<double>{1.5, -2});
}

TEST_CASE("note CNN features") {
  std::mt19937_64 rng(8);
  const auto table = table3();
  const std::vector<std::size_t> widths{2, 3, 4};
  const ParamStore p = conv_params(2, 5, widths, rng);

  const ClinicalNote note{1, {1, 3, 2, 2, 1}};
  const auto f1 = extract_note_feature(note, table, p, widths);
  const auto f2 = extract_note_feature(ClinicalNote{6, note.token_ids}, table, p, widths);
  CHECK(f1.vector.size() == 15);
  CHECK(f1.vector.values == f2.vector.values);
  CHECK(f2.chart_time == 6);

  // All-OOV and too-short notes: zero embeddings, so each filter pools relu(bias).
  for (const ClinicalNote& n : {ClinicalNote{1, {0, 0, 0, 0, 0}}, ClinicalNote{1, {}}}) {
    const auto f = extract_note_feature(n, table, p, widths);
    std::size_t k = 0;
    for (std::size_t w : widths)
      for (double b : p.get(conv_bias_name(w)).values) CHECK(f.vector.values[k++] == std::max(0.0, b));
  }
}
