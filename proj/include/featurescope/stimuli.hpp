#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace featurescope {

struct StimulusSet {
  std::vector<std::size_t> indices;  // sorted, distinct
  std::uint64_t seed = 0;
  std::size_t requested_n = 0;
};

/// Uniform sample without replacement from [0, n_rows): partial Fisher-Yates
/// over the identity permutation drawing j = i + bounded(n_rows - i) from
/// SplitMix64::stream(seed, {fnv1a64("stimuli")}), then sorted. Requests at or
/// above n_rows return every index.
StimulusSet select_stimuli(std::size_t n_rows, std::size_t requested_n, std::uint64_t seed);

}  // namespace featurescope
