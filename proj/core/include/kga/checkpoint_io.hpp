#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kga/numeric.hpp"

namespace kga {

/// Binary container shared by every checkpoint in the project:
///
///   "KGA1" | version u16 | kind u8 | { name_len u16 | name | rows u32 | cols u32 | f32[rows*cols] }*
///
/// All integers and floats are little-endian; matrices run to end of file.
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint8_t {
  TransE = 0,
  TransH = 1,
  DistMult = 2,
  Alignment = 16,
};

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct MatrixArchive {
  CheckpointKind kind = CheckpointKind::Alignment;
  std::vector<NamedMatrix> matrices;

  const Matrix& get(const std::string& name) const;
  bool has(const std::string& name) const;
  void put(std::string name, Matrix value) { matrices.push_back({std::move(name), std::move(value)}); }
};

/// Writes to a sibling temporary file and renames it over `path`, so an
/// interrupted write never replaces an existing archive.
void write_archive(const MatrixArchive& archive, const std::filesystem::path& path);

/// Throws FormatError on bad magic, unknown version, unknown kind, or truncation.
MatrixArchive read_archive(const std::filesystem::path& path);

}  // namespace kga
