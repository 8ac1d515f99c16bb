#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "icumm/data_model.hpp"
#include "icumm/errors.hpp"

using namespace icumm;

namespace {

Episode make_episode(int hours, std::vector<int> note_times, std::optional<int> mortality = 0) {
  Episode e;
  e.patient_id = "p";
  e.timeseries = Tensor({static_cast<std::size_t>(hours), 2});
  for (int ct : note_times) e.notes.push_back({ct, {1, 2}});
  e.labels = derive_labels(mortality, std::nullopt, hours + 10, hours);
  return e;
}

bool has_code(const std::vector<Violation>& v, std::string_view code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

}  // namespace

TEST_CASE("task and bucket names") {
  for (Task t : {Task::ihm, Task::decomp, Task::los}) CHECK(parse_task(to_string(t)) == t);
  CHECK_THROWS_AS(parse_task("mortality"), ValidationError);
}

TEST_CASE("bucketize_los") {
  CHECK(bucketize_los(12) == 0);
  CHECK(bucketize_los(25) == 1);
  CHECK(bucketize_los(15 * 24) == 9);
  const double hours[] = {0, 23, 24, 47, 48, 191, 192, 335, 336, 1000};
  const int buckets[] = {0, 0, 1, 1, 2, 7, 8, 8, 9, 9};
  for (int i = 0; i < 10; ++i) CHECK(bucketize_los(hours[i]) == buckets[i]);
  for (int day = 0; day < 8; ++day) CHECK(bucketize_los(day * 24 + 23.9) == day);
  CHECK_THROWS_AS(bucketize_los(-1), ValidationError);
}

TEST_CASE("derive_labels: decompensation window and LOS") {
  const auto survivor = derive_labels(0, std::nullopt, 60, 10);
  CHECK(survivor.decompensation == std::vector<int>(6, 0));
  REQUIRE(survivor.los_bucket.size() == 6);
  CHECK(survivor.los_bucket.front() == bucketize_los(55));
  CHECK(survivor.los_bucket.back() == bucketize_los(50));

  const auto death = derive_labels(1, 40, 40, 40);
  CHECK(death.los_bucket.empty());
  CHECK_FALSE(death.has_los());
  // d_t = 1 exactly for 16 <= t < 40.
  for (int t = 5; t <= 40; ++t) CHECK(death.decompensation[t - 5] == (t >= 16 && t < 40 ? 1 : 0));
}

TEST_CASE("validate_episode") {
  CHECK(validate_episode(make_episode(48, {1}), Task::ihm).empty());
  const auto short_stay = validate_episode(make_episode(47, {1}), Task::ihm);
  REQUIRE(has_code(short_stay, "short_stay"));
  CHECK(short_stay.front().message == "stay shorter than 48h");
  const auto no_notes = validate_episode(make_episode(48, {}), Task::ihm);
  REQUIRE(no_notes.size() == 1);
  CHECK(no_notes.front().message == "patient without notes");

  CHECK(has_code(validate_episode(make_episode(48, {1}, std::nullopt), Task::ihm), "no_mortality"));
  CHECK(has_code(validate_episode(make_episode(10, {11}), Task::decomp), "note_time"));
  CHECK(has_code(validate_episode(make_episode(10, {4, 2}), Task::decomp), "note_order"));
  CHECK(has_code(validate_episode(make_episode(4, {1}), Task::decomp), "short_stay"));

  Episode died = make_episode(30, {1});
  died.labels = derive_labels(1, 30, 30, 30);
  CHECK(validate_episode(died, Task::decomp).empty());
  CHECK(has_code(validate_episode(died, Task::los), "icu_death"));

  Episode nan = make_episode(10, {1});
  nan.timeseries.values[3] = NAN;
  CHECK(has_code(validate_episode(nan, Task::decomp), "non_finite"));
}

TEST_CASE("episode rows are 1-based hours") {
  Episode e = make_episode(3, {1});
  e.timeseries.values = {1, 2, 3, 4, 5, 6};
  CHECK(e.row(2)[0] == 3);
  CHECK(e.row(3)[1] == 6);
}

TEST_CASE("embedding table") {
  EmbeddingTable t(3);
  CHECK(t.size() == 1);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(t.add("alpha", a));
  CHECK(t.add("beta", b));
  CHECK_FALSE(t.add("alpha", b));
  CHECK(t.size() == 3);
  CHECK(t.lookup("beta") == 2);
  CHECK(t.lookup("gamma") == 0);
  CHECK(std::vector<double>(t.vector(0).begin(), t.vector(0).end()) == std::vector<double>(3, 0.0));
  CHECK(std::vector<double>(t.vector(1).begin(), t.vector(1).end()) == a);
  CHECK_THROWS_AS(t.add("bad", std::vector<double>{1.0}), DimensionError);
  const std::vector<TokenId> ids{2, 0, 1};
  const Tensor m = t.embed(ids);
  CHECK(m.shape == Shape{3, 3});
  CHECK(m.at(0, 0) == 4);
  CHECK(m.at(1, 2) == 0);
  CHECK(t.tokens() == std::vector<std::string>{"", "alpha", "beta"});
}
