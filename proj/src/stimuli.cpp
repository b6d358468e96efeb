#include "featurescope/stimuli.hpp"

#include <algorithm>
#include <numeric>

#include "featurescope/error.hpp"
#include "featurescope/rng.hpp"

namespace featurescope {

StimulusSet select_stimuli(std::size_t n_rows, std::size_t requested_n, std::uint64_t seed) {
  if (n_rows < 1) throw ValidationError("stimulus population is empty");
  StimulusSet out{{}, seed, requested_n};
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (requested_n >= n_rows) {
    out.indices = std::move(perm);
    return out;
  }
  auto rng = SplitMix64::stream(seed, {fnv1a64("stimuli")});
  for (std::size_t i = 0; i < requested_n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n_rows - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(requested_n);
  std::sort(perm.begin(), perm.end());
  out.indices = std::move(perm);
  return out;
}

}  // namespace featurescope
