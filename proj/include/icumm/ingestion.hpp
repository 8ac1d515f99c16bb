#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icumm/data_model.hpp"

namespace icumm {

namespace fs = std::filesystem;

// ---- tokenization -------------------------------------------------------

/// Lowercased alphanumeric runs of `text`.
std::vector<std::string> split_words(std::string_view text);
/// split_words mapped through the table; unknown words become 0.
std::vector<TokenId> tokenize(std::string_view text, const EmbeddingTable& table);

// ---- embeddings ---------------------------------------------------------

/// Reads `<token> <v1> ... <vE>` lines. An optional word2vec-style
/// `<count> <dim>` header line is skipped. Duplicate tokens keep their first
/// vector and produce a warning.
EmbeddingTable read_embeddings(const fs::path& path, std::vector<std::string>* warnings = nullptr);
void write_embeddings(const fs::path& path, const EmbeddingTable& table);

// ---- episodes -----------------------------------------------------------

struct RawNote {
  std::optional<double> hour;  // absent when the note has no chart time
  std::string text;
  bool operator==(const RawNote&) const = default;
};

/// An episode exactly as stored on disk.
struct RawEpisode {
  std::string patient_id;
  std::vector<std::string> feature_names;
  std::vector<std::vector<std::optional<double>>> rows;  // hour 1..T, empty cell = missing
  std::vector<RawNote> notes;
  std::optional<int> mortality;
  std::optional<int> death_hour;
  int total_stay_hours = 0;
  bool operator==(const RawEpisode&) const = default;
};

inline constexpr std::string_view kTimeseriesFile = "timeseries.csv";
inline constexpr std::string_view kNotesFile = "notes.jsonl";
inline constexpr std::string_view kLabelsFile = "labels.json";

struct ReadOptions {
  std::size_t max_note_tokens = 2000;
  /// Fill value per feature when no earlier observation exists (0 when unset).
  std::vector<double> normal_values;
};

RawEpisode read_raw_episode(const fs::path& dir, std::string patient_id);
void write_raw_episode(const fs::path& dir, const RawEpisode& e);

/// Forward-fills the series, drops notes without chart time or charted after
/// the stay, merges pre-admission notes (hour <= 0) into one note at hour 1,
/// tokenizes and derives task labels.
Episode to_episode(const RawEpisode& raw, const EmbeddingTable& table, const ReadOptions& opts,
                   std::vector<std::string>* warnings = nullptr);

Episode read_episode(const fs::path& dir, std::string patient_id, const EmbeddingTable& table,
                     const ReadOptions& opts, std::vector<std::string>* warnings = nullptr);

// ---- manifest and splits ------------------------------------------------

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct ManifestEntry {
  std::string patient_id;
  std::string path;  // relative to the dataset root
  Split split = Split::train;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::string signal;  // synthetic signal plan, or "external"
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::vector<double> normal_values;
  std::string embeddings = "embeddings.txt";
  std::vector<ManifestEntry> episodes;
  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr std::string_view kManifestFile = "manifest.json";

DatasetManifest read_manifest(const fs::path& root);
void write_manifest(const fs::path& root, const DatasetManifest& m);

/// Split for each id (same order as `ids`). Test takes `test_fraction` of all
/// ids, validation takes `val_fraction` of the rest. Depends only on the id
/// set and `seed`.
std::vector<Split> assign_splits(const std::vector<std::string>& ids, double test_fraction, double val_fraction,
                                 std::uint64_t seed);

struct Exclusion {
  std::string patient_id;
  std::string reason;
};

struct Dataset {
  DatasetManifest manifest;
  EmbeddingTable table;
  std::vector<Episode> train;
  std::vector<Episode> val;
  std::vector<Episode> test;
  std::vector<Exclusion> excluded;
  std::vector<std::string> warnings;

  const std::vector<Episode>& split(Split s) const;
};

/// Loads and validates every episode for `task`. Episodes failing validation
/// are excluded with their reasons. Each split is ordered by patient id.
Dataset load_dataset(const fs::path& root, Task task, const ReadOptions& opts = {});

// ---- number formatting shared by writers -------------------------------

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);

}  // namespace icumm
