#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace featurescope {

/// Write `bytes` to `path` through `path.tmp` + rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Whole-file read. Throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace featurescope
