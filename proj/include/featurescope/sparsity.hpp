#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "featurescope/feature_matrix.hpp"
#include "featurescope/labels.hpp"
#include "featurescope/probing.hpp"

namespace featurescope {

struct VarianceProfile {
  std::vector<double> ratios;  // d values, descending
  double top2_share = 0.0;     // ratios[0] + ratios[1] (ratios[0] when d = 1)
};

/// Full-PCA variance spectrum. rows >= 2.
VarianceProfile explained_variance(const FeatureMatrix& f);

struct PcProbePoint {
  std::size_t k = 0;
  Metrics metrics;
};

/// For each k, rebuilds the features from the k lowest-variance principal
/// axes and probes them with a stratified 80/20 split seeded by cfg.seed.
/// The basis is fitted once, on the training rows. Output is sorted by k, duplicates
/// removed; every k must lie in [1, d].
std::vector<PcProbePoint> pc_probe_curve(const FeatureMatrix& f, const LabelVector& y, std::vector<std::size_t> ks,
                                         const ProbeConfig& cfg);

/// The default sweep: 1, 2, 4, ... below d, then d-2, d-1, d.
std::vector<std::size_t> default_pc_probe_ks(std::size_t d);

nlohmann::ordered_json variance_profile_to_json(const VarianceProfile& v);
/// Columns: component,ratio,cumulative.
std::string variance_profile_to_csv(const VarianceProfile& v);
nlohmann::ordered_json pc_probe_curve_to_json(const std::vector<PcProbePoint>& curve);
/// Columns: k,macro_f1,accuracy.
std::string pc_probe_curve_to_csv(const std::vector<PcProbePoint>& curve);

}  // namespace featurescope
