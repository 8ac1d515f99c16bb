#include "icumm/fixtures.hpp"

#include <algorithm>

namespace icumm {

EmbeddingTable random_table(std::size_t vocab, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingTable table(dim);
  std::vector<double> v(dim);
  for (std::size_t w = 1; w <= vocab; ++w) {
    for (auto& x : v) x = n(rng);
    table.add("t" + std::to_string(w), v);
  }
  return table;
}

Episode random_episode(std::string id, int hours, std::size_t features, std::size_t notes, std::size_t vocab,
                       bool dies, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Episode e;
  e.patient_id = std::move(id);
  e.timeseries = Tensor({static_cast<std::size_t>(hours), features});
  for (auto& x : e.timeseries.values) x = n(rng);

  std::uniform_int_distribution<int> hour(1, hours);
  std::uniform_int_distribution<int> length(3, 8);
  std::uniform_int_distribution<TokenId> token(0, static_cast<TokenId>(vocab));
  for (std::size_t k = 0; k < notes; ++k) {
    ClinicalNote note;
    note.chart_time = hour(rng);
    const int len = length(rng);
    for (int i = 0; i < len; ++i) note.token_ids.push_back(token(rng));
    e.notes.push_back(std::move(note));
  }
  std::stable_sort(e.notes.begin(), e.notes.end(),
                   [](const ClinicalNote& a, const ClinicalNote& b) { return a.chart_time < b.chart_time; });
  e.labels = derive_labels(dies ? 1 : 0, dies ? std::optional<int>(hours) : std::nullopt, hours, hours);
  return e;
}

}  // namespace icumm
