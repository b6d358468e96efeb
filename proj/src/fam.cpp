#include "featurescope/fam.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "featurescope/error.hpp"
#include "featurescope/fs_util.hpp"

namespace featurescope {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

FamHeader parse_header(const unsigned char* bytes, const std::filesystem::path& path) {
  if (std::memcmp(bytes, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, expected FAM1");
  }
  FamHeader h{get_u32(bytes + 4), get_u32(bytes + 8)};
  if (h.rows == 0 || h.cols == 0) {
    throw FormatError(path.string() + ": zero-sized matrix");
  }
  return h;
}

std::uint64_t expected_size(const FamHeader& h) {
  return kFamHeaderBytes + 4ULL * h.rows * h.cols;
}

}  // namespace

void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  m.validate_finite();
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) {
    throw ValidationError("matrix shape exceeds 32-bit header fields");
  }
  std::string out;
  out.reserve(kFamHeaderBytes + 4 * m.values().size());
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  write_file_atomic(path, out);
}

FamHeader read_matrix_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char header[kFamHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kFamHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kFamHeaderBytes)) {
    throw FormatError(path.string() + ": truncated header");
  }
  FamHeader h = parse_header(header, path);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());
  if (size != expected_size(h)) {
    throw FormatError(path.string() + ": payload is " + std::to_string(size) +
                      " bytes, header implies " + std::to_string(expected_size(h)));
  }
  return h;
}

FeatureMatrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < kFamHeaderBytes) throw FormatError(path.string() + ": truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  FamHeader h = parse_header(p, path);
  if (bytes.size() != expected_size(h)) {
    throw FormatError(path.string() + ": payload is " + std::to_string(bytes.size()) +
                      " bytes, header implies " + std::to_string(expected_size(h)));
  }
  std::vector<float> values(static_cast<std::size_t>(h.rows) * h.cols);
  const unsigned char* payload = p + kFamHeaderBytes;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
  }
  FeatureMatrix m(h.rows, h.cols, std::move(values));
  if (!m.all_finite()) throw FormatError(path.string() + ": non-finite value in payload");
  return m;
}

}  // namespace featurescope
