#include "wi2vi/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "wi2vi/errors.hpp"

namespace wi2vi {
namespace {

constexpr char kMagic[8] = {'W', '2', 'V', 'P', '1', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "W2VP1 I/O assumes a little-endian host");

template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::istream& is, const std::string& file) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) throw DataError("w2vp: truncated file " + file);
  return v;
}

}  // namespace

void write_w2vp(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("w2vp: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, entries.size());
  for (const auto& e : entries) {
    if (ad::shape_numel(e.shape) != e.data.size()) throw std::invalid_argument("w2vp: entry " + e.name + " size mismatch");
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  }
  os.flush();
  if (!os) throw DataError("w2vp: write failed for " + path.string());
}

void write_w2vp_atomic(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries) {
  auto tmp = path;
  tmp += ".tmp";
  write_w2vp(tmp, entries);
  std::filesystem::rename(tmp, path);
}

std::vector<CheckpointEntry> read_w2vp(const std::filesystem::path& path) {
  const auto file = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("w2vp: cannot open " + file);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError("w2vp: bad magic in " + file);
  }
  const auto version = get<std::uint32_t>(is, file);
  if (version != kVersion) throw DataError("w2vp: unsupported version " + std::to_string(version) + " in " + file);
  const auto count = get<std::uint64_t>(is, file);
  std::vector<CheckpointEntry> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = get<std::uint32_t>(is, file);
    if (len > 4096) throw DataError("w2vp: implausible name length in " + file);
    e.name.resize(len);
    if (!is.read(e.name.data(), len)) throw DataError("w2vp: truncated file " + file);
    const auto rank = get<std::uint32_t>(is, file);
    if (rank > 8) throw DataError("w2vp: implausible rank for " + e.name + " in " + file);
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get<std::uint64_t>(is, file));
    const auto numel = ad::shape_numel(e.shape);
    if (numel > (std::uint64_t{1} << 32)) throw DataError("w2vp: implausible size for " + e.name);
    e.data.resize(numel);
    if (!is.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(numel * sizeof(double)))) {
      throw DataError("w2vp: truncated file " + file);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace wi2vi
