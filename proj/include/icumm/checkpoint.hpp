#pragma once

#include <filesystem>
#include <iosfwd>

#include "icumm/models.hpp"

namespace icumm {

/// Binary little-endian container:
///   "ICUMMCK1", u64 config length, config JSON,
///   u64 parameter count, then per parameter
///   u32 name length, name, u32 rank, u64 dims[rank], f64 values.
/// Adam state is not stored.
void save_checkpoint(std::ostream& out, const Model& model);
Model load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model);
/// Throws ParseError on a truncated or malformed file.
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace icumm
