#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/manifest.hpp"
#include "featurescope/numerics.hpp"
#include "featurescope/stimuli.hpp"

namespace featurescope {

struct RsaScore {
  double value = 0.0;
  Metric metric = Metric::euclidean;
  std::size_t n_stimuli = 0;
};

/// Pearson correlation of the strict upper triangles of the two stimulus
/// distance matrices. Rows must be aligned; column counts may differ.
RsaScore rsa_score(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric = Metric::euclidean);
RsaScore rsa_score(const Matrix& a, const Matrix& b, Metric metric = Metric::euclidean);

struct RsaLayerResult {
  int layer = 0;
  std::optional<RsaScore> score;
  std::string status;  // "ok" or "failed: <reason>"
};

struct RsaCurve {
  std::string run_a;
  std::string run_b;
  std::string checkpoint_a;
  std::string checkpoint_b;
  std::string split;
  Metric metric = Metric::euclidean;
  StimulusSet stimuli;
  std::vector<RsaLayerResult> layers;  // manifest layer order
};

/// One score per layer between run_a@checkpoint_a and run_b@checkpoint_b on
/// the stimulus rows. Layers are computed in parallel; a failing layer is
/// marked and the rest of the curve still completes. Lower values mean the
/// representation moved further from the reference.
RsaCurve rsa_layer_curve(const RunHandle& run_a, const RunHandle& run_b, const std::string& checkpoint_a,
                         const std::string& checkpoint_b, const std::string& split, const StimulusSet& stimuli,
                         Metric metric = Metric::euclidean);

nlohmann::ordered_json rsa_curve_to_json(const RsaCurve& curve);
/// Columns: layer,score,metric,n,status.
std::string rsa_curve_to_csv(const RsaCurve& curve);

}  // namespace featurescope
