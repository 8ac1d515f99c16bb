#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "icumm/ingestion.hpp"

namespace icumm {

/// Where the outcome signal lives.
///   mixed         half of the risk is visible only in the series, half only in the notes
///   notes_only    the series carries no outcome information
///   series_heavy  notes carry a faint echo of the series signal
enum class SignalPlan { mixed, notes_only, series_heavy };

std::string_view to_string(SignalPlan p);
SignalPlan parse_signal_plan(std::string_view name);

struct SyntheticConfig {
  std::size_t patients = 100;
  std::size_t feature_dim = 8;  // at least 4
  std::size_t embed_dim = 16;
  SignalPlan signal = SignalPlan::mixed;
  std::uint64_t seed = 1;
  double missing_rate = 0.1;
  double test_fraction = 0.2;
  double val_fraction = 0.15;

  void validate() const;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  EmbeddingTable table;
  std::vector<RawEpisode> episodes;  // same order as manifest.episodes
};

/// Builds the whole dataset in memory. The result depends only on `cfg`.
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

/// Writes manifest, embeddings and one directory per episode under `root`.
void write_dataset(const std::filesystem::path& root, const SyntheticDataset& data);

}  // namespace icumm
