#pragma once

#include <random>
#include <string>

#include "icumm/data_model.hpp"

namespace icumm {

// Small random inputs for self-checks and tests.

/// `vocab` words named t1..t<vocab>, entries N(0, 1).
EmbeddingTable random_table(std::size_t vocab, std::size_t dim, std::mt19937_64& rng);

/// Random series N(0, 1), `notes` notes with 3..8 tokens (some out of
/// vocabulary) charted at random hours, and labels for a survivor or, when
/// `dies`, a death at the last hour.
Episode random_episode(std::string id, int hours, std::size_t features, std::size_t notes, std::size_t vocab,
                       bool dies, std::mt19937_64& rng);

}  // namespace icumm
