#include "icumm/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "icumm/errors.hpp"

namespace icumm {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

bool is_uint(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<int> optional_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const EmbeddingTable& table) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(table.lookup(w));
  return ids;
}

EmbeddingTable read_embeddings(const fs::path& path, std::vector<std::string>* warnings) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  EmbeddingTable table;
  bool have_dim = false;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (!have_dim && lineno == 1 && fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) continue;
    if (fields.size() < 2) throw ParseError("embedding line has no vector", lineno);
    const std::size_t dim = fields.size() - 1;
    if (!have_dim) {
      table = EmbeddingTable(dim);
      have_dim = true;
    } else if (dim != table.dim()) {
      throw ParseError("embedding has " + std::to_string(dim) + " values, expected " + std::to_string(table.dim()),
                       lineno);
    }
    vec.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      auto v = parse_double(fields[k + 1]);
      if (!v || !std::isfinite(*v)) throw ParseError("bad number '" + std::string(fields[k + 1]) + "'", lineno);
      vec[k] = *v;
    }
    const std::string token(fields[0]);
    if (!table.add(token, vec)) warn(warnings, "duplicate embedding token '" + token + "' at line " + std::to_string(lineno) + " ignored");
  }
  if (!have_dim) throw ParseError("embedding file " + path.string() + " has no vectors");
  return table;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
  auto out = open_out(path);
  const auto tokens = table.tokens();
  for (std::size_t id = 1; id < tokens.size(); ++id) {
    out << tokens[id];
    for (double v : table.vector(static_cast<TokenId>(id))) out << ' ' << format_double(v);
    out << '\n';
  }
}

RawEpisode read_raw_episode(const fs::path& dir, std::string patient_id) {
  RawEpisode e;
  e.patient_id = std::move(patient_id);

  {
    const auto path = dir / kTimeseriesFile;
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line, ',');
    if (header.empty() || header[0] != "hour") throw ParseError(path.string() + ": header must start with 'hour'", lineno);
    for (std::size_t k = 1; k < header.size(); ++k) e.feature_names.emplace_back(header[k]);
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = split(line, ',');
      if (cells.size() != header.size()) {
        throw ParseError(path.string() + ": expected " + std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()),
                         lineno);
      }
      auto hour = parse_double(cells[0]);
      if (!hour || *hour != static_cast<double>(e.rows.size() + 1)) {
        throw ParseError(path.string() + ": expected hour " + std::to_string(e.rows.size() + 1), lineno);
      }
      std::vector<std::optional<double>> row;
      for (std::size_t k = 1; k < cells.size(); ++k) {
        if (cells[k].empty()) {
          row.push_back(std::nullopt);
          continue;
        }
        auto v = parse_double(cells[k]);
        if (!v || !std::isfinite(*v)) throw ParseError(path.string() + ": bad number '" + std::string(cells[k]) + "'", lineno);
        row.push_back(v);
      }
      e.rows.push_back(std::move(row));
    }
  }

  {
    const auto path = dir / kNotesFile;
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        RawNote n;
        if (j.contains("hour") && !j.at("hour").is_null()) n.hour = j.at("hour").get<double>();
        n.text = j.at("text").get<std::string>();
        e.notes.push_back(std::move(n));
      } catch (const json::exception& ex) {
        throw ParseError(path.string() + ": " + ex.what(), lineno);
      }
    }
  }

  {
    const auto path = dir / kLabelsFile;
    auto in = open_in(path);
    try {
      const json j = json::parse(in);
      e.mortality = optional_int(j, "mortality");
      e.death_hour = optional_int(j, "death_hour");
      e.total_stay_hours = j.at("total_stay_hours").get<int>();
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ": " + ex.what());
    }
  }
  return e;
}

void write_raw_episode(const fs::path& dir, const RawEpisode& e) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / kTimeseriesFile);
    out << "hour";
    for (const auto& n : e.feature_names) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < e.rows.size(); ++t) {
      out << (t + 1);
      for (const auto& cell : e.rows[t]) {
        out << ',';
        if (cell) out << format_double(*cell);
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / kNotesFile);
    for (const auto& n : e.notes) {
      json j;
      j["hour"] = n.hour ? json(*n.hour) : json(nullptr);
      j["text"] = n.text;
      out << j.dump() << '\n';
    }
  }
  {
    auto out = open_out(dir / kLabelsFile);
    json j;
    j["mortality"] = e.mortality ? json(*e.mortality) : json(nullptr);
    j["death_hour"] = e.death_hour ? json(*e.death_hour) : json(nullptr);
    j["total_stay_hours"] = e.total_stay_hours;
    out << j.dump() << '\n';
  }
}

Episode to_episode(const RawEpisode& raw, const EmbeddingTable& table, const ReadOptions& opts,
                   std::vector<std::string>* warnings) {
  Episode e;
  e.patient_id = raw.patient_id;
  const std::size_t T = raw.rows.size();
  const std::size_t D = raw.feature_names.size();
  if (!opts.normal_values.empty() && opts.normal_values.size() != D) {
    throw ValidationError("normal values list has " + std::to_string(opts.normal_values.size()) + " entries for " +
                          std::to_string(D) + " features");
  }
  if (T > 0 && D > 0) {
    e.timeseries = Tensor({T, D});
    for (std::size_t k = 0; k < D; ++k) {
      double last = opts.normal_values.empty() ? 0.0 : opts.normal_values[k];
      for (std::size_t t = 0; t < T; ++t) {
        if (raw.rows[t][k]) last = *raw.rows[t][k];
        e.timeseries.at(t, k) = last;
      }
    }
  }

  auto cap = [&](std::vector<TokenId> ids) {
    if (ids.size() > opts.max_note_tokens) ids.resize(opts.max_note_tokens);
    return ids;
  };

  struct Timed {
    double hour;
    const RawNote* note;
  };
  std::vector<Timed> timed;
  for (const auto& n : raw.notes) {
    if (!n.hour) {
      warn(warnings, raw.patient_id + ": note without chart time dropped");
      continue;
    }
    if (!std::isfinite(*n.hour)) {
      warn(warnings, raw.patient_id + ": note with non-finite chart time dropped");
      continue;
    }
    timed.push_back({*n.hour, &n});
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) { return a.hour < b.hour; });

  ClinicalNote pre{1, {}};
  bool have_pre = false;
  std::vector<ClinicalNote> regular;
  for (const auto& tn : timed) {
    auto ids = tokenize(tn.note->text, table);
    if (tn.hour <= 0.0) {
      pre.token_ids.insert(pre.token_ids.end(), ids.begin(), ids.end());
      have_pre = true;
      continue;
    }
    const auto ct = static_cast<int>(std::ceil(tn.hour));
    if (ct > static_cast<int>(T)) {
      warn(warnings, raw.patient_id + ": note charted at hour " + format_double(tn.hour) + " after the stay dropped");
      continue;
    }
    regular.push_back({ct, cap(std::move(ids))});
  }
  if (have_pre) {
    pre.token_ids = cap(std::move(pre.token_ids));
    e.notes.push_back(std::move(pre));
  }
  for (auto& n : regular) e.notes.push_back(std::move(n));

  e.labels = derive_labels(raw.mortality, raw.death_hour, raw.total_stay_hours, static_cast<int>(T));
  return e;
}

Episode read_episode(const fs::path& dir, std::string patient_id, const EmbeddingTable& table,
                     const ReadOptions& opts, std::vector<std::string>* warnings) {
  return to_episode(read_raw_episode(dir, std::move(patient_id)), table, opts, warnings);
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

DatasetManifest read_manifest(const fs::path& root) {
  const auto path = root / kManifestFile;
  auto in = open_in(path);
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.signal = j.value("signal", std::string("external"));
    m.seed = j.value("seed", std::uint64_t{0});
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.normal_values = j.value("normal_values", std::vector<double>{});
    m.embeddings = j.value("embeddings", std::string("embeddings.txt"));
    for (const auto& ej : j.at("episodes")) {
      m.episodes.push_back({ej.at("patient_id").get<std::string>(), ej.at("path").get<std::string>(),
                            parse_split(ej.at("split").get<std::string>())});
    }
  } catch (const json::exception& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
  std::vector<std::string> ids;
  for (const auto& e : m.episodes) ids.push_back(e.patient_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ParseError(path.string() + ": episode listed more than once");
  }
  return m;
}

void write_manifest(const fs::path& root, const DatasetManifest& m) {
  json j;
  j["format"] = "icumm-dataset";
  j["version"] = 1;
  j["signal"] = m.signal;
  j["seed"] = m.seed;
  j["feature_names"] = m.feature_names;
  j["normal_values"] = m.normal_values;
  j["embeddings"] = m.embeddings;
  json eps = json::array();
  for (const auto& e : m.episodes) {
    eps.push_back({{"patient_id", e.patient_id}, {"path", e.path}, {"split", std::string(to_string(e.split))}});
  }
  j["episodes"] = std::move(eps);
  auto out = open_out(root / kManifestFile);
  out << j.dump(1) << '\n';
}

std::vector<Split> assign_splits(const std::vector<std::string>& ids, double test_fraction, double val_fraction,
                                 std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0 && val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ValidationError("split fractions must be in [0, 1)");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = ids.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n - n_test)));
  std::vector<Split> out(n, Split::train);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_test) out[order[k]] = Split::test;
    else if (k < n_test + n_val) out[order[k]] = Split::val;
  }
  return out;
}

const std::vector<Episode>& Dataset::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

Dataset load_dataset(const fs::path& root, Task task, const ReadOptions& opts) {
  Dataset ds;
  ds.manifest = read_manifest(root);
  ds.table = read_embeddings(root / ds.manifest.embeddings, &ds.warnings);
  ReadOptions ro = opts;
  if (ro.normal_values.empty()) ro.normal_values = ds.manifest.normal_values;

  auto entries = ds.manifest.episodes;
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.patient_id < b.patient_id; });
  for (const auto& entry : entries) {
    Episode e = read_episode(root / entry.path, entry.patient_id, ds.table, ro, &ds.warnings);
    if (e.features() != 0 && e.features() != ds.manifest.feature_names.size()) {
      throw ParseError(entry.patient_id + ": feature count differs from manifest");
    }
    const auto violations = validate_episode(e, task);
    if (!violations.empty()) {
      std::string reason;
      for (const auto& v : violations) reason += (reason.empty() ? "" : "; ") + v.message;
      ds.excluded.push_back({entry.patient_id, reason});
      continue;
    }
    switch (entry.split) {
      case Split::train: ds.train.push_back(std::move(e)); break;
      case Split::val: ds.val.push_back(std::move(e)); break;
      case Split::test: ds.test.push_back(std::move(e)); break;
    }
  }
  return ds;
}

}  // namespace icumm
