#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "rsub/numerics/tensor.hpp"

namespace rsub {

/// Container shared by weight and subspace files:
///   "RSUB" | version u8 | u32 header length | JSON header
///   | u32 section count | per section: u32 name length, name, u32 rank,
///     u64 extents..., little-endian float32 data
///   | u64 FNV-1a of everything before it.
struct TensorFile {
  static constexpr std::uint8_t kVersion = 1;

  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor>> sections;

  std::string serialize() const;
  /// Throws kFormatVersion, kFormatTruncated, kFormatChecksum.
  static TensorFile parse(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static TensorFile load(const std::filesystem::path& path);

  const Tensor& section(const std::string& name) const;
};

/// Whole-file read; kIo when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rsub
