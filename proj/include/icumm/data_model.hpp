#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icumm/tensor.hpp"

namespace icumm {

enum class Task { ihm, decomp, los };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// IHM predicts from the first 48 hours of the stay.
inline constexpr int kIhmHours = 48;
/// Sequential tasks predict at hours 5..T.
inline constexpr int kFirstPredictionHour = 5;
inline constexpr int kLosBuckets = 10;
/// Decompensation horizon in hours.
inline constexpr int kDecompWindow = 24;

using TokenId = std::uint32_t;

/// A note charted at integer hour `chart_time` (1-based, 1 <= t <= T).
struct ClinicalNote {
  int chart_time = 1;
  std::vector<TokenId> token_ids;

  bool operator==(const ClinicalNote&) const = default;
};

/// Labels for all three tasks, derived from the raw outcome fields.
struct EpisodeLabels {
  std::optional<int> mortality;      // m; absent when unknown
  std::optional<int> death_hour;     // in-ICU death hour, absent for survivors
  int total_stay_hours = 0;
  std::vector<int> decompensation;   // d_t for t = 5..T
  std::vector<int> los_bucket;       // l_t for t = 5..T; empty for in-ICU deaths

  bool has_los() const { return !death_hour.has_value(); }
  bool operator==(const EpisodeLabels&) const = default;
};

/// Builds d_t and l_t for a stay with `hours` time-series rows.
EpisodeLabels derive_labels(std::optional<int> mortality, std::optional<int> death_hour, int total_stay_hours,
                            int hours);

struct Episode {
  std::string patient_id;
  Tensor timeseries;  // [T x D], row t-1 holds hour t
  std::vector<ClinicalNote> notes;
  EpisodeLabels labels;

  int hours() const { return timeseries.rank() == 2 ? static_cast<int>(timeseries.dim(0)) : 0; }
  std::size_t features() const { return timeseries.rank() == 2 ? timeseries.dim(1) : 0; }
  /// Row for 1-based hour t.
  std::span<const double> row(int t) const;
};

/// Remaining-stay class: one bucket per day for days 0..7, then [8,14) days, then 14+.
int bucketize_los(double remaining_hours);

struct Violation {
  std::string code;
  std::string message;
};

/// Checks Episode invariants plus task requirements. Never throws.
std::vector<Violation> validate_episode(const Episode& e, Task task);

/// Frozen pretrained word vectors. Row 0 is the zero vector used for
/// out-of-vocabulary tokens and padding.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// `dim` columns; starts with only the reserved row.
  explicit EmbeddingTable(std::size_t dim);

  /// Returns false (and leaves the table unchanged) when `token` already exists.
  bool add(const std::string& token, std::span<const double> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ ? vectors_.size() / dim_ : 0; }
  TokenId lookup(std::string_view token) const;
  std::span<const double> vector(TokenId id) const;
  const std::unordered_map<std::string, TokenId>& vocab() const { return vocab_; }
  /// Tokens in index order, with "" at the reserved row.
  std::vector<std::string> tokens() const;

  /// Stacks the vectors of `ids` into an [n x E] tensor.
  Tensor embed(std::span<const TokenId> ids) const;
  Tensor as_tensor() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> vectors_;
  std::unordered_map<std::string, TokenId> vocab_;
};

}  // namespace icumm
