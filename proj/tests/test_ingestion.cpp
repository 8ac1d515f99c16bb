#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "icumm/errors.hpp"
#include "icumm/ingestion.hpp"
#include "icumm/synthetic.hpp"

using namespace icumm;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("icumm_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

EmbeddingTable small_table() {
  EmbeddingTable t(2);
  t.add("patient", std::vector<double>{1, 0});
  t.add("stable", std::vector<double>{0, 1});
  t.add("worse", std::vector<double>{1, 1});
  return t;
}

RawEpisode raw_fixture(int hours) {
  RawEpisode r;
  r.patient_id = "p1";
  r.feature_names = {"hr", "sbp"};
  for (int t = 0; t < hours; ++t) r.rows.push_back({double(t), std::nullopt});
  r.mortality = 0;
  r.total_stay_hours = hours + 5;
  return r;
}

}  // namespace

TEST_CASE("tokenize") {
  const auto t = small_table();
  CHECK(split_words("Patient stable.") == std::vector<std::string>{"patient", "stable"});
  CHECK(tokenize("Patient stable.", t) == std::vector<TokenId>{1, 2});
  CHECK(tokenize("", t).empty());
  CHECK(tokenize("patient xylophone WORSE", t) == std::vector<TokenId>{1, 0, 3});
  CHECK(split_words("bp 120/80, hr=95") == std::vector<std::string>{"bp", "120", "80", "hr", "95"});
}

TEST_CASE("read_embeddings") {
  TempDir dir("emb");
  write_text(dir.path / "two.txt", "alpha 1 2 3\nbeta 4 5 6\n");
  const auto t = read_embeddings(dir.path / "two.txt");
  CHECK(t.size() == 3);
  CHECK(t.dim() == 3);
  CHECK(t.vector(2)[1] == 5.0);

  write_text(dir.path / "header.txt", "2 3\nalpha 1 2 3\nbeta 4 5 6\n");
  CHECK(read_embeddings(dir.path / "header.txt").size() == 3);

  write_text(dir.path / "dup.txt", "alpha 1 2 3\nalpha 9 9 9\n");
  std::vector<std::string> warnings;
  const auto d = read_embeddings(dir.path / "dup.txt", &warnings);
  CHECK(d.size() == 2);
  CHECK(d.vector(1)[0] == 1.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("alpha") != std::string::npos);

  write_text(dir.path / "bad.txt", "alpha 1 2 3\nbeta 4 5\n");
  try {
    read_embeddings(dir.path / "bad.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& ex) {
    CHECK(ex.line() == 2);
  }

  write_embeddings(dir.path / "round.txt", t);
  const auto back = read_embeddings(dir.path / "round.txt");
  CHECK(back.tokens() == t.tokens());
  CHECK(back.as_tensor().values == t.as_tensor().values);
}

TEST_CASE("to_episode: forward fill, note rules, labels") {
  const auto table = small_table();
  RawEpisode r = raw_fixture(48);
  r.rows[0][0] = std::nullopt;
  r.rows[2][1] = 7.0;
  r.notes = {{-3.0, "patient"}, {-1.0, "stable"}, {std::nullopt, "lost"}, {12.5, "worse"}, {60.0, "late"},
             {2.0, "patient worse"}};
  ReadOptions opts;
  opts.normal_values = {70.0, 120.0};
  std::vector<std::string> warnings;
  const Episode e = to_episode(r, table, opts, &warnings);

  CHECK(e.timeseries.shape == Shape{48, 2});
  CHECK(e.timeseries.at(0, 0) == 70.0);
  CHECK(e.timeseries.at(1, 1) == 120.0);
  CHECK(e.timeseries.at(2, 1) == 7.0);
  CHECK(e.timeseries.at(47, 1) == 7.0);

  REQUIRE(e.notes.size() == 3);
  CHECK(e.notes[0] == ClinicalNote{1, {1, 2}});
  CHECK(e.notes[1] == ClinicalNote{2, {1, 3}});
  CHECK(e.notes[2] == ClinicalNote{13, {3}});
  CHECK(warnings.size() == 2);
  CHECK(e.labels == derive_labels(0, std::nullopt, 53, 48));
  CHECK(validate_episode(e, Task::ihm).empty());

  ReadOptions capped;
  capped.max_note_tokens = 1;
  CHECK(to_episode(r, table, capped).notes[1].token_ids.size() == 1);

  RawEpisode silent = raw_fixture(48);
  const Episode no_notes = to_episode(silent, table, {});
  REQUIRE(validate_episode(no_notes, Task::ihm).size() == 1);
  CHECK(validate_episode(no_notes, Task::ihm)[0].message == "patient without notes");
}

TEST_CASE("raw episode files round-trip") {
  TempDir dir("raw");
  RawEpisode r = raw_fixture(6);
  r.rows[3][0] = 0.1 + 0.2;
  r.notes = {{1.25, "Patient \"stable\", \\ ok"}, {std::nullopt, "no time"}, {-2.0, "before"}};
  r.mortality = 1;
  r.death_hour = 6;
  write_raw_episode(dir.path / "p1", r);
  CHECK(read_raw_episode(dir.path / "p1", "p1") == r);

  const Episode e = read_episode(dir.path / "p1", "p1", small_table(), {});
  CHECK(e.timeseries.shape == Shape{6, 2});
}

TEST_CASE("malformed series rows report line numbers") {
  TempDir dir("bad");
  write_raw_episode(dir.path / "p", raw_fixture(3));
  write_text(dir.path / "p" / "timeseries.csv", "hour,hr,sbp\n1,2,3\n2,abc,4\n");
  try {
    read_raw_episode(dir.path / "p", "p");
    FAIL("expected ParseError");
  } catch (const ParseError& ex) {
    CHECK(ex.line() == 3);
  }
  write_text(dir.path / "p" / "timeseries.csv", "hour,hr,sbp\n1,2,3\n3,1,4\n");
  CHECK_THROWS_AS(read_raw_episode(dir.path / "p", "p"), ParseError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1 + 0.2, 1e-300, 123456.789}) CHECK(parse_double(format_double(v)) == v);
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
}

TEST_CASE("assign_splits depends only on the id set and seed") {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("p" + std::to_string(i));
  const auto a = assign_splits(ids, 0.2, 0.15, 3);
  auto reversed = ids;
  std::reverse(reversed.begin(), reversed.end());
  const auto b = assign_splits(reversed, 0.2, 0.15, 3);
  for (std::size_t i = 0; i < ids.size(); ++i) CHECK(a[i] == b[ids.size() - 1 - i]);
  CHECK(std::count(a.begin(), a.end(), Split::test) == 20);
  CHECK(std::count(a.begin(), a.end(), Split::val) == 12);
  CHECK(assign_splits(ids, 0.2, 0.15, 4) != a);
}

TEST_CASE("synthetic dataset: counts, manifest, determinism") {
  TempDir dir("synth");
  SyntheticConfig cfg;
  cfg.patients = 100;
  cfg.signal = SignalPlan::notes_only;
  write_dataset(dir.path / "a", generate_synthetic(cfg));
  write_dataset(dir.path / "b", generate_synthetic(cfg));

  const auto m = read_manifest(dir.path / "a");
  CHECK(m.episodes.size() == 100);
  CHECK(m.signal == "notes-only");
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "a" / "episodes")) dirs += e.is_directory();
  CHECK(dirs == 100);

  for (const auto& e : fs::recursive_directory_iterator(dir.path / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path / "a");
    CHECK(slurp(e.path()) == slurp(dir.path / "b" / rel));
  }

  const Dataset ds = load_dataset(dir.path / "a", Task::ihm);
  CHECK(ds.train.size() + ds.val.size() + ds.test.size() + ds.excluded.size() == 100);
  CHECK(std::is_sorted(ds.train.begin(), ds.train.end(),
                       [](const Episode& x, const Episode& y) { return x.patient_id < y.patient_id; }));
  for (const auto& ex : ds.excluded) CHECK_FALSE(ex.reason.empty());

  SyntheticConfig bad = cfg;
  bad.feature_dim = 2;
  CHECK_THROWS_AS(generate_synthetic(bad), ValidationError);
}
