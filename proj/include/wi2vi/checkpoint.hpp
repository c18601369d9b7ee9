#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wi2vi/tensor.hpp"

namespace wi2vi {

// One named array of a W2VP1 file.
struct CheckpointEntry {
  std::string name;
  ad::Shape shape;
  std::vector<double> data;
};

// W2VP1: 8-byte magic "W2VP1\0\0\0", u32 version, u64 entry count, then per
// entry {u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data}.
// Little-endian.
void write_w2vp(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_w2vp(const std::filesystem::path& path);

// Writes to a temporary sibling and renames, so a failed write never leaves a
// half-written file under the final name.
void write_w2vp_atomic(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries);

}  // namespace wi2vi
