#include "icumm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

constexpr std::string_view kKeys[] = {
    "data.root",        "data.max_note_tokens", "model.task",         "model.variant",   "model.hidden",
    "model.filters",    "model.widths",         "model.decay_lambda", "model.dropout",   "model.weight_decay",
    "train.epochs",     "train.batch_size",     "train.learning_rate", "train.seeds",    "train.clip_norm",
    "experiment.tasks", "experiment.variants",  "output.dir",
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(',', start);
    if (pos == std::string_view::npos) pos = s.size();
    auto item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(item);
    start = pos + 1;
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_positive(std::string_view key, std::string_view v) {
  const auto n = to_uint(key, v);
  if (n == 0) throw ValidationError(std::string(key) + " must be positive");
  return static_cast<std::size_t>(n);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

std::vector<std::string_view> CliConfig::known_keys() { return {std::begin(kKeys), std::end(kKeys)}; }

void CliConfig::set(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
  if (value.empty()) throw ValidationError(std::string(key) + ": empty value");

  if (key == "data.root") {
    data_root = std::string(value);
  } else if (key == "data.max_note_tokens") {
    max_note_tokens = to_positive(key, value);
  } else if (key == "model.task") {
    task = parse_task(value);
  } else if (key == "model.variant") {
    variant = parse_variant(value);
  } else if (key == "model.hidden") {
    model.hidden = to_positive(key, value);
  } else if (key == "model.filters") {
    model.filters = to_positive(key, value);
  } else if (key == "model.widths") {
    std::vector<std::size_t> w;
    for (auto item : list(value)) w.push_back(to_positive(key, item));
    if (w.empty()) throw ValidationError("model.widths: need at least one width");
    model.widths = w;
  } else if (key == "model.decay_lambda") {
    const double v = to_double(key, value);
    if (v < 0.0) throw ValidationError("model.decay_lambda must be non-negative");
    model.decay_lambda = v;
  } else if (key == "model.dropout") {
    const double v = to_double(key, value);
    if (!(v >= 0.0 && v < 1.0)) throw ValidationError("model.dropout must be in [0, 1)");
    model.dropout = v;
  } else if (key == "model.weight_decay") {
    const double v = to_double(key, value);
    if (v < 0.0) throw ValidationError("model.weight_decay must be non-negative");
    model.weight_decay = v;
  } else if (key == "train.epochs") {
    train.epochs = to_positive(key, value);
  } else if (key == "train.batch_size") {
    train.batch_size = to_positive(key, value);
  } else if (key == "train.learning_rate") {
    const double v = to_double(key, value);
    if (v <= 0.0) throw ValidationError("train.learning_rate must be positive");
    train.learning_rate = v;
  } else if (key == "train.seeds") {
    std::vector<std::uint64_t> s;
    for (auto item : list(value)) s.push_back(to_uint(key, item));
    if (s.empty()) throw ValidationError("train.seeds: need at least one seed");
    train.seeds = s;
  } else if (key == "train.clip_norm") {
    const double v = to_double(key, value);
    if (v < 0.0) throw ValidationError("train.clip_norm must be non-negative");
    train.clip_norm = v;
  } else if (key == "experiment.tasks") {
    std::vector<Task> t;
    for (auto item : list(value)) t.push_back(parse_task(item));
    if (t.empty()) throw ValidationError("experiment.tasks: need at least one task");
    experiment_tasks = t;
  } else if (key == "experiment.variants") {
    std::vector<Variant> v;
    for (auto item : list(value)) v.push_back(parse_variant(item));
    if (v.empty()) throw ValidationError("experiment.variants: need at least one variant");
    experiment_variants = v;
  } else if (key == "output.dir") {
    output_dir = std::string(value);
  }
}

void CliConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void load_config_text(std::string_view text, CliConfig& cfg) {
  std::string section;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", lineno);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const auto name = trim(line.substr(0, eq));
    if (name.empty()) throw ParseError("missing key", lineno);
    if (section.empty()) throw ParseError("key '" + std::string(name) + "' outside any [section]", lineno);
    try {
      cfg.set(section + "." + std::string(name), line.substr(eq + 1));
    } catch (const ValidationError& ex) {
      throw ValidationError(std::string(ex.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
}

void load_config_file(const std::filesystem::path& path, CliConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  load_config_text(os.str(), cfg);
}

}  // namespace icumm
