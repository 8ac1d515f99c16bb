#include "icumm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

struct PlanWeights {
  double series;
  double notes;
};

PlanWeights weights_for(SignalPlan p) {
  switch (p) {
    case SignalPlan::mixed: return {1.0, 1.0};
    case SignalPlan::notes_only: return {0.0, 1.0};
    case SignalPlan::series_heavy: return {1.0, 0.2};
  }
  return {1.0, 1.0};
}

constexpr int kLevels = 5;

// Five graded levels each; level 0 is the mildest / shortest.
const std::array<std::array<const char*, 3>, kLevels> kSeverityWords = {{
    {"stable", "comfortable", "calm"},
    {"alert", "responsive", "oriented"},
    {"monitored", "fluctuating", "guarded"},
    {"hypotensive", "tachycardic", "febrile"},
    {"critical", "unresponsive", "shock"},
}};
const std::array<std::array<const char*, 3>, kLevels> kCourseWords = {{
    {"discharge", "transfer", "ambulating"},
    {"improving", "weaning", "tolerating"},
    {"ongoing", "continued", "pending"},
    {"prolonged", "slow", "complicated"},
    {"tracheostomy", "rehabilitation", "dialysis"},
}};
const std::array<const char*, 5> kDeteriorationWords = {"pressors", "intubated", "arrest", "withdrawal", "palliative"};
constexpr std::size_t kFillerWords = 200;

constexpr double kDeteriorationHours = 36.0;
constexpr double kMortalityIntercept = -2.1;
constexpr double kMortalitySlope = 2.6;

std::string filler_word(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03zu", k);
  return buf;
}

std::vector<double> unit_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = n(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

EmbeddingTable build_vocabulary(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const auto u_sev = unit_vector(dim, rng);
  const auto u_course = unit_vector(dim, rng);
  const auto u_det = unit_vector(dim, rng);
  EmbeddingTable table(dim);
  std::vector<double> v(dim);
  auto graded = [&](const auto& words, const std::vector<double>& dir) {
    for (int level = 0; level < kLevels; ++level) {
      for (const char* w : words[static_cast<std::size_t>(level)]) {
        for (std::size_t k = 0; k < dim; ++k) v[k] = (level - 2) * dir[k] + 0.3 * n(rng);
        table.add(w, v);
      }
    }
  };
  graded(kSeverityWords, u_sev);
  graded(kCourseWords, u_course);
  for (const char* w : kDeteriorationWords) {
    for (std::size_t k = 0; k < dim; ++k) v[k] = 2.0 * u_det[k] + 0.3 * n(rng);
    table.add(w, v);
  }
  for (std::size_t f = 0; f < kFillerWords; ++f) {
    for (std::size_t k = 0; k < dim; ++k) v[k] = 0.3 * n(rng);
    table.add(filler_word(f), v);
  }
  return table;
}

int graded_level(double latent, double weight, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.35);
  const double x = 2.0 + 1.3 * weight * latent + n(rng);
  return std::clamp(static_cast<int>(std::lround(x)), 0, kLevels - 1);
}

struct Patient {
  double sev_series, sev_notes, len_series, len_notes;
  bool dies;
  bool series_channel;  // where the pre-death deterioration shows
  int hours;
};

std::string note_text(const Patient& p, const PlanWeights& w, double hour, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> filler_count(12, 30);
  std::uniform_int_distribution<std::size_t> filler(0, kFillerWords - 1);
  std::uniform_int_distribution<int> pick3(0, 2);
  std::uniform_int_distribution<int> number(1, 300);
  std::bernoulli_distribution oov(0.1);

  std::vector<std::string> words;
  const int n_filler = filler_count(rng);
  for (int k = 0; k < n_filler; ++k) {
    words.push_back(oov(rng) ? std::to_string(number(rng)) : filler_word(filler(rng)));
  }
  std::vector<std::string> signal;
  const int n_sev = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int k = 0; k < n_sev; ++k) {
    signal.emplace_back(kSeverityWords[static_cast<std::size_t>(graded_level(p.sev_notes, w.notes, rng))]
                                      [static_cast<std::size_t>(pick3(rng))]);
  }
  const int n_course = std::uniform_int_distribution<int>(1, 2)(rng);
  for (int k = 0; k < n_course; ++k) {
    signal.emplace_back(kCourseWords[static_cast<std::size_t>(graded_level(p.len_notes, w.notes, rng))]
                                    [static_cast<std::size_t>(pick3(rng))]);
  }
  if (p.dies && !p.series_channel && hour >= p.hours - kDeteriorationHours) {
    std::uniform_int_distribution<std::size_t> det(0, kDeteriorationWords.size() - 1);
    const int n_det = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int k = 0; k < n_det; ++k) signal.emplace_back(kDeteriorationWords[det(rng)]);
  }
  for (auto& s : signal) {
    std::uniform_int_distribution<std::size_t> pos(0, words.size());
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos(rng)), std::move(s));
  }

  std::string text;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) text += (k % 9 == 0) ? ". " : " ";
    text += words[k];
  }
  text += '.';
  return text;
}

RawEpisode make_episode(std::size_t index, const SyntheticConfig& cfg, const PlanWeights& w) {
  std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Patient p{};
  p.sev_series = n01(rng);
  p.sev_notes = n01(rng);
  p.len_series = n01(rng);
  p.len_notes = n01(rng);
  const double norm = std::sqrt(w.series * w.series + w.notes * w.notes);
  const double risk = (w.series * p.sev_series + w.notes * p.sev_notes) / norm;
  const double course = (w.series * p.len_series + w.notes * p.len_notes) / norm;
  p.dies = u01(rng) < 1.0 / (1.0 + std::exp(-(kMortalityIntercept + kMortalitySlope * risk)));
  p.series_channel = u01(rng) < (w.series * w.series) / (norm * norm);
  const double days = std::clamp(std::exp(1.15 + 0.5 * course + 0.15 * n01(rng)), 0.4, 20.0);
  p.hours = std::max(6, static_cast<int>(std::lround(24.0 * days)));

  RawEpisode e;
  char id[16];
  std::snprintf(id, sizeof id, "p%05zu", index);
  e.patient_id = id;
  for (std::size_t k = 0; k < cfg.feature_dim; ++k) e.feature_names.push_back("f" + std::to_string(k));
  e.mortality = p.dies ? 1 : 0;
  if (p.dies) e.death_hour = p.hours;
  e.total_stay_hours = p.hours;

  std::normal_distribution<double> obs(0.0, 0.6);
  std::normal_distribution<double> ramp_noise(0.0, 0.3);
  std::bernoulli_distribution missing(cfg.missing_rate);
  std::vector<double> ar(cfg.feature_dim, 0.0);
  for (int t = 1; t <= p.hours; ++t) {
    std::vector<std::optional<double>> row(cfg.feature_dim);
    row[0] = t / 100.0;
    row[1] = w.series * p.sev_series + obs(rng);
    double ramp = 0.0;
    if (p.dies && p.series_channel) ramp = 2.5 * std::clamp(1.0 - (p.hours - t) / kDeteriorationHours, 0.0, 1.0);
    row[2] = ramp + ramp_noise(rng);
    row[3] = w.series * p.len_series + obs(rng);
    for (std::size_t k = 4; k < cfg.feature_dim; ++k) {
      ar[k] = 0.8 * ar[k] + obs(rng);
      row[k] = ar[k];
    }
    for (std::size_t k = 1; k < cfg.feature_dim; ++k) {
      if (missing(rng)) row[k].reset();
    }
    for (auto& cell : row) {
      if (cell) cell = std::round(*cell * 1e4) / 1e4;
    }
    e.rows.push_back(std::move(row));
  }

  std::vector<double> hours;
  if (u01(rng) < 0.5) hours.push_back(-std::uniform_real_distribution<double>(0.0, 12.0)(rng));
  std::exponential_distribution<double> gap(1.0 / 12.0);
  for (double h = std::uniform_real_distribution<double>(0.5, std::min(8.0, p.hours - 0.5))(rng); h < p.hours;
       h += gap(rng)) {
    hours.push_back(h);
  }
  if (p.dies && !p.series_channel) {
    const int extra = std::uniform_int_distribution<int>(2, 3)(rng);
    const double from = std::max(0.5, p.hours - kDeteriorationHours);
    for (int k = 0; k < extra; ++k) hours.push_back(std::uniform_real_distribution<double>(from, p.hours)(rng));
  }
  std::sort(hours.begin(), hours.end());
  std::bernoulli_distribution untimed(0.01);
  for (double h : hours) {
    h = std::round(h * 100.0) / 100.0;
    RawNote note;
    note.text = note_text(p, w, h, rng);
    if (!untimed(rng)) note.hour = h;
    e.notes.push_back(std::move(note));
  }
  return e;
}

}  // namespace

std::string_view to_string(SignalPlan p) {
  switch (p) {
    case SignalPlan::mixed: return "mixed";
    case SignalPlan::notes_only: return "notes-only";
    case SignalPlan::series_heavy: return "series-heavy";
  }
  return "?";
}

SignalPlan parse_signal_plan(std::string_view name) {
  if (name == "mixed") return SignalPlan::mixed;
  if (name == "notes-only") return SignalPlan::notes_only;
  if (name == "series-heavy") return SignalPlan::series_heavy;
  throw ValidationError("unknown signal plan '" + std::string(name) + "' (expected mixed, notes-only or series-heavy)");
}

void SyntheticConfig::validate() const {
  if (patients == 0) throw ValidationError("patient count must be positive");
  if (feature_dim < 4) throw ValidationError("synthetic data needs at least 4 features");
  if (embed_dim == 0) throw ValidationError("embedding dim must be positive");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ValidationError("missing rate must be in [0, 1)");
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto w = weights_for(cfg.signal);
  SyntheticDataset out;
  {
    std::seed_seq seq{cfg.seed, std::uint64_t{0x766f636162}};
    std::mt19937_64 rng(seq);
    out.table = build_vocabulary(cfg.embed_dim, rng);
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < cfg.patients; ++i) {
    out.episodes.push_back(make_episode(i, cfg, w));
    ids.push_back(out.episodes.back().patient_id);
  }
  const auto splits = assign_splits(ids, cfg.test_fraction, cfg.val_fraction, cfg.seed);

  auto& m = out.manifest;
  m.signal = std::string(to_string(cfg.signal));
  m.seed = cfg.seed;
  m.feature_names = out.episodes.front().feature_names;
  m.normal_values.assign(cfg.feature_dim, 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) m.episodes.push_back({ids[i], "episodes/" + ids[i], splits[i]});
  return out;
}

void write_dataset(const std::filesystem::path& root, const SyntheticDataset& data) {
  std::filesystem::create_directories(root);
  write_manifest(root, data.manifest);
  write_embeddings(root / data.manifest.embeddings, data.table);
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    write_raw_episode(root / data.manifest.episodes[i].path, data.episodes[i]);
  }
}

}  // namespace icumm
