#pragma once

#include <cstdint>
#include <filesystem>

#include "featurescope/feature_matrix.hpp"

namespace featurescope {

// FAM1 layout, all little-endian:
//   bytes 0..3   "FAM1"
//   bytes 4..7   rows  (uint32)
//   bytes 8..11  cols  (uint32)
//   then rows*cols IEEE-754 binary32 values, row-major.
inline constexpr std::size_t kFamHeaderBytes = 12;

struct FamHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

/// Writes via a temporary sibling file and an atomic rename.
void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

FeatureMatrix read_matrix(const std::filesystem::path& path);

/// Reads and checks the header plus the total file size, without the payload.
FamHeader read_matrix_header(const std::filesystem::path& path);

}  // namespace featurescope
