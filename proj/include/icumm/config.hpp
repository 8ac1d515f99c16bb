#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icumm/training.hpp"

namespace icumm {

/// Everything a command can be configured with. Keys are `section.name`:
///
///   data.root  data.max_note_tokens
///   model.task  model.variant  model.hidden  model.filters  model.widths
///   model.decay_lambda  model.dropout  model.weight_decay
///   train.epochs  train.batch_size  train.learning_rate  train.seeds  train.clip_norm
///   experiment.tasks  experiment.variants
///   output.dir
///
/// Lists are comma-separated.
struct CliConfig {
  std::filesystem::path data_root;
  std::size_t max_note_tokens = 2000;
  std::optional<Task> task;
  std::optional<Variant> variant;
  ModelOverrides model;
  TrainConfig train;
  std::vector<Task> experiment_tasks = {Task::ihm, Task::decomp, Task::los};
  std::vector<Variant> experiment_variants = {Variant::baseline, Variant::text_only, Variant::multimodal_avgwe,
                                              Variant::multimodal_cnn};
  std::filesystem::path output_dir;

  /// Sets one key. Throws ValidationError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies a `key=value` override.
  void apply_override(std::string_view assignment);

  static std::vector<std::string_view> known_keys();
};

/// Reads `key = value` lines grouped under `[section]` headers into `cfg`.
/// `#` and `;` start comments. Syntax errors throw ParseError with the line;
/// bad keys or values throw ValidationError naming the line.
void load_config_file(const std::filesystem::path& path, CliConfig& cfg);
void load_config_text(std::string_view text, CliConfig& cfg);

}  // namespace icumm
