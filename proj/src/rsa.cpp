#include "featurescope/rsa.hpp"

#include "featurescope/error.hpp"
#include "featurescope/format.hpp"

namespace featurescope {

namespace {

RsaScore score_from_distances(const DistanceMatrix& da, const DistanceMatrix& db, Metric metric) {
  const auto ua = da.upper_strict();
  const auto ub = db.upper_strict();
  double r = 0.0;
  try {
    r = pearson(ua, ub);
  } catch (const DegenerateGeometryError&) {
    throw DegenerateGeometryError("RSA: all stimuli are equidistant in at least one feature space");
  }
  return {r, metric, da.size()};
}

void check_rows(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ValidationError("RSA: feature spaces have " + std::to_string(a) + " and " + std::to_string(b) +
                          " stimuli");
  }
  if (a < 3) throw ValidationError("RSA needs at least 3 stimuli");
}

}  // namespace

RsaScore rsa_score(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric) {
  check_rows(a.rows(), b.rows());
  return score_from_distances(pairwise_distances(a, metric), pairwise_distances(b, metric), metric);
}

RsaScore rsa_score(const Matrix& a, const Matrix& b, Metric metric) {
  check_rows(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()));
  return score_from_distances(pairwise_distances(a, metric), pairwise_distances(b, metric), metric);
}

RsaCurve rsa_layer_curve(const RunHandle& run_a, const RunHandle& run_b, const std::string& checkpoint_a,
                         const std::string& checkpoint_b, const std::string& split, const StimulusSet& stimuli,
                         Metric metric) {
  const auto& layers = run_a.manifest().layers;
  if (layers != run_b.manifest().layers) throw ValidationError("RSA: runs do not share a layer list");
  run_a.checkpoint_position(checkpoint_a);
  run_b.checkpoint_position(checkpoint_b);
  const std::size_t rows = run_a.rows(split);
  if (run_b.rows(split) != rows) throw ValidationError("RSA: runs disagree on the size of split '" + split + "'");
  for (std::size_t idx : stimuli.indices) {
    if (idx >= rows) throw ValidationError("RSA: stimulus index " + std::to_string(idx) + " out of range");
  }

  RsaCurve curve{run_a.manifest().run_id, run_b.manifest().run_id, checkpoint_a, checkpoint_b, split, metric,
                 stimuli, {}};
  curve.layers.resize(layers.size());
  const long long count = static_cast<long long>(layers.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long li = 0; li < count; ++li) {
    auto& out = curve.layers[static_cast<std::size_t>(li)];
    out.layer = layers[static_cast<std::size_t>(li)];
    try {
      const auto fa = run_a.matrix(out.layer, checkpoint_a, split).select_rows(stimuli.indices);
      const auto fb = run_b.matrix(out.layer, checkpoint_b, split).select_rows(stimuli.indices);
      out.score = rsa_score(fa, fb, metric);
      out.status = "ok";
    } catch (const std::exception& e) {
      out.status = std::string("failed: ") + e.what();
    }
  }
  return curve;
}

nlohmann::ordered_json rsa_curve_to_json(const RsaCurve& curve) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["run_a"] = curve.run_a;
  j["run_b"] = curve.run_b;
  j["checkpoint_a"] = curve.checkpoint_a;
  j["checkpoint_b"] = curve.checkpoint_b;
  j["split"] = curve.split;
  j["metric"] = to_string(curve.metric);
  j["n_stimuli"] = curve.stimuli.indices.size();
  j["stimulus_seed"] = curve.stimuli.seed;
  j["interpretation"] = "lower scores imply greater change relative to the reference checkpoint";
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : curve.layers) {
    nlohmann::ordered_json e;
    e["layer"] = l.layer;
    e["score"] = l.score ? nlohmann::ordered_json(l.score->value) : nlohmann::ordered_json();
    e["status"] = l.status;
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  return j;
}

std::string rsa_curve_to_csv(const RsaCurve& curve) {
  CsvWriter csv({"layer", "score", "metric", "n", "status"});
  for (const auto& l : curve.layers) {
    csv.row({std::to_string(l.layer), l.score ? fixed6(l.score->value) : std::string(), to_string(curve.metric),
             std::to_string(curve.stimuli.indices.size()), l.status});
  }
  return csv.str();
}

}  // namespace featurescope
