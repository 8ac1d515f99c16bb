#include "icumm/data_model.hpp"

#include <algorithm>
#include <cmath>

#include "icumm/errors.hpp"

namespace icumm {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::ihm: return "ihm";
    case Task::decomp: return "decomp";
    case Task::los: return "los";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "ihm") return Task::ihm;
  if (name == "decomp") return Task::decomp;
  if (name == "los") return Task::los;
  throw ValidationError("unknown task '" + std::string(name) + "' (expected ihm, decomp or los)");
}

EpisodeLabels derive_labels(std::optional<int> mortality, std::optional<int> death_hour, int total_stay_hours,
                            int hours) {
  EpisodeLabels labels;
  labels.mortality = mortality;
  labels.death_hour = death_hour;
  labels.total_stay_hours = total_stay_hours;
  for (int t = kFirstPredictionHour; t <= hours; ++t) {
    const bool dies_soon = death_hour && *death_hour > t && *death_hour <= t + kDecompWindow;
    labels.decompensation.push_back(dies_soon ? 1 : 0);
    if (!death_hour) labels.los_bucket.push_back(bucketize_los(std::max(0, total_stay_hours - t)));
  }
  return labels;
}

std::span<const double> Episode::row(int t) const {
  const std::size_t d = features();
  return std::span<const double>(timeseries.values).subspan(static_cast<std::size_t>(t - 1) * d, d);
}

int bucketize_los(double remaining_hours) {
  if (!(remaining_hours >= 0.0)) throw ValidationError("remaining stay must be non-negative, got " + std::to_string(remaining_hours));
  const double days = remaining_hours / 24.0;
  if (days < 8.0) return static_cast<int>(std::floor(days));
  if (days < 14.0) return 8;
  return 9;
}

std::vector<Violation> validate_episode(const Episode& e, Task task) {
  std::vector<Violation> out;
  const int T = e.hours();
  if (T < 1) {
    out.push_back({"empty_stay", "time series has no hourly rows"});
    return out;
  }
  if (!e.timeseries.all_finite()) out.push_back({"non_finite", "time series holds non-finite values"});
  if (e.notes.empty()) out.push_back({"no_notes", "patient without notes"});
  for (std::size_t i = 0; i < e.notes.size(); ++i) {
    const int ct = e.notes[i].chart_time;
    if (ct < 1 || ct > T) {
      out.push_back({"note_time", "note " + std::to_string(i) + " charted at hour " + std::to_string(ct) +
                                      " outside [1, " + std::to_string(T) + "]"});
    }
    if (i > 0 && ct < e.notes[i - 1].chart_time) {
      out.push_back({"note_order", "notes not sorted by chart time at index " + std::to_string(i)});
    }
  }
  const auto expected = static_cast<std::size_t>(std::max(0, T - (kFirstPredictionHour - 1)));
  if (e.labels.decompensation.size() != expected) {
    out.push_back({"label_length", "decompensation labels have " + std::to_string(e.labels.decompensation.size()) +
                                       " entries, expected " + std::to_string(expected)});
  }
  if (e.labels.has_los() && e.labels.los_bucket.size() != expected) {
    out.push_back({"label_length", "LOS labels have " + std::to_string(e.labels.los_bucket.size()) +
                                       " entries, expected " + std::to_string(expected)});
  }

  switch (task) {
    case Task::ihm:
      if (T < kIhmHours) out.push_back({"short_stay", "stay shorter than 48h"});
      if (!e.labels.mortality) out.push_back({"no_mortality", "mortality label missing"});
      else if (*e.labels.mortality != 0 && *e.labels.mortality != 1) out.push_back({"bad_label", "mortality label not 0/1"});
      break;
    case Task::decomp:
      if (T < kFirstPredictionHour) out.push_back({"short_stay", "stay shorter than 5h"});
      break;
    case Task::los:
      if (T < kFirstPredictionHour) out.push_back({"short_stay", "stay shorter than 5h"});
      if (!e.labels.has_los()) out.push_back({"icu_death", "in-ICU death excluded from length of stay"});
      break;
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim), vectors_(dim, 0.0) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

bool EmbeddingTable::add(const std::string& token, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("embedding for '" + token + "' has " + std::to_string(vector.size()) + " values, table has " +
                         std::to_string(dim_));
  }
  if (token.empty() || vocab_.contains(token)) return false;
  vocab_.emplace(token, static_cast<TokenId>(size()));
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
  return true;
}

TokenId EmbeddingTable::lookup(std::string_view token) const {
  auto it = vocab_.find(std::string(token));
  return it == vocab_.end() ? 0 : it->second;
}

std::span<const double> EmbeddingTable::vector(TokenId id) const {
  if (id >= size()) throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
  return std::span<const double>(vectors_).subspan(id * dim_, dim_);
}

std::vector<std::string> EmbeddingTable::tokens() const {
  std::vector<std::string> out(size());
  for (const auto& [tok, id] : vocab_) out[id] = tok;
  return out;
}

Tensor EmbeddingTable::embed(std::span<const TokenId> ids) const {
  Tensor out({ids.size(), dim_});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto v = vector(ids[r]);
    std::copy(v.begin(), v.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * dim_));
  }
  return out;
}

Tensor EmbeddingTable::as_tensor() const { return Tensor({size(), dim_}, vectors_); }

}  // namespace icumm
