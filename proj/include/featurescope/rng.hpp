#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace featurescope {

/// SplitMix64 (Steele, Lea & Flood 2014). The state advances by the golden
/// gamma 0x9E3779B97F4A7C15 and each output is the finalizer
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z ^= z >> 31
/// Everything drawn from it (uniform doubles, bounded integers, normals) is
/// defined in this header so other-language readers can reproduce the exact
/// streams.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for (seed, tags...). Tags are folded with mix64 so
  /// streams are addressable without drawing from a shared generator.
  static SplitMix64 stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  std::uint64_t next();

  /// 53 high bits scaled to [0, 1).
  double uniform();

  /// Uniform integer in [0, bound) by rejection (no modulo bias). bound > 0.
  std::uint64_t bounded(std::uint64_t bound);

  /// Standard normal via Box-Muller on two uniforms, u1 mapped to (0, 1].
  /// Both outputs of a pair are used; the cached second value is part of the
  /// stream definition.
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

/// Fisher-Yates from the back: for i = n-1 .. 1, swap(i, bounded(i + 1)).
void shuffle(std::span<std::size_t> values, SplitMix64& rng);

/// FNV-1a 64-bit; used for config hashes embedded in reports.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace featurescope
