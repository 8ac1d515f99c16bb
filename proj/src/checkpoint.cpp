#include "icumm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "icumm/errors.hpp"

namespace icumm {

namespace {

constexpr char kMagic[8] = {'I', 'C', 'U', 'M', 'M', 'C', 'K', '1'};
constexpr std::uint64_t kMaxNameLength = 1 << 16;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename U>
void put(std::ostream& out, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t k = 0; k < sizeof(U); ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), sizeof b);
}

template <typename U>
U get(std::istream& in) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof b)) throw ParseError("checkpoint truncated");
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(static_cast<U>(b[k]) << (8 * k));
  return v;
}

std::string get_bytes(std::istream& in, std::uint64_t n) {
  std::string s(static_cast<std::size_t>(n), '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw ParseError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model) {
  out.write(kMagic, sizeof kMagic);
  const std::string cfg = model.config().to_json();
  put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto& params = model.params();
  put<std::uint64_t>(out, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    const auto& t = params[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

Model load_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a checkpoint (bad magic)");
  }
  const auto cfg_len = get<std::uint64_t>(in);
  if (cfg_len > kMaxNameLength) throw ParseError("checkpoint config length out of range");
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(get_bytes(in, cfg_len));
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("checkpoint config: ") + ex.what());
  }

  ParamStore params;
  const auto count = get<std::uint64_t>(in);
  if (count > kMaxNameLength) throw ParseError("checkpoint parameter count out of range");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > kMaxNameLength) throw ParseError("checkpoint name length out of range");
    std::string name = get_bytes(in, name_len);
    const auto rank = get<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw ParseError("checkpoint tensor rank out of range");
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = get<std::uint64_t>(in);
      if (d == 0 || d > kMaxElements || n * d > kMaxElements) throw ParseError("checkpoint tensor size out of range");
      n *= d;
      shape.push_back(static_cast<std::size_t>(d));
    }
    Tensor t(shape);
    for (auto& v : t.values) v = std::bit_cast<double>(get<std::uint64_t>(in));
    if (!t.all_finite()) throw ParseError("checkpoint parameter '" + name + "' holds non-finite values");
    try {
      params.add(std::move(name), std::move(t));
    } catch (const ValidationError& ex) {
      throw ParseError(std::string("checkpoint: ") + ex.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("checkpoint has trailing bytes");
  try {
    return Model(std::move(cfg), std::move(params));
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("checkpoint: ") + ex.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_checkpoint(out, model);
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace icumm
