#include "featurescope/sparsity.hpp"

#include <algorithm>
#include <exception>

#include "featurescope/error.hpp"
#include "featurescope/format.hpp"
#include "featurescope/numerics.hpp"

namespace featurescope {

VarianceProfile explained_variance(const FeatureMatrix& f) {
  if (f.rows() < 2) throw DegenerateInputError("variance profile needs at least 2 rows");
  const Vector ratios = pca_spectrum(to_dense(f));
  VarianceProfile v;
  v.ratios.assign(ratios.data(), ratios.data() + ratios.size());
  v.top2_share = v.ratios[0] + (v.ratios.size() > 1 ? v.ratios[1] : 0.0);
  return v;
}

std::vector<std::size_t> default_pc_probe_ks(std::size_t d) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k < d; k *= 2) ks.push_back(k);
  for (std::size_t back = 3; back-- > 0;) {
    if (d > back) ks.push_back(d - back);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

std::vector<PcProbePoint> pc_probe_curve(const FeatureMatrix& f, const LabelVector& y, std::vector<std::size_t> ks,
                                         const ProbeConfig& cfg) {
  cfg.validate();
  if (f.rows() != y.size()) throw ValidationError("pc probe: features and labels differ in length");
  const std::size_t d = f.cols();
  if (ks.empty()) throw ValidationError("pc probe: no k values given");
  for (std::size_t k : ks) {
    if (k < 1 || k > d) {
      throw ValidationError("pc probe: k=" + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
    }
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const Matrix x = to_dense(f);
  const SplitIndices split = stratified_split(y, 0.2, cfg.seed);
  // Fit on the training rows only: a basis fitted on every row makes the
  // bottom-space class sums cancel, which anti-correlates train and eval.
  Matrix x_train(static_cast<Eigen::Index>(split.train.size()), x.cols());
  for (std::size_t t = 0; t < split.train.size(); ++t) {
    x_train.row(static_cast<Eigen::Index>(t)) = x.row(static_cast<Eigen::Index>(split.train[t]));
  }
  const PcaModel basis = pca_basis(x_train);
  const LabelVector y_train = y.subset(split.train);
  const LabelVector y_eval = y.subset(split.eval);

  std::vector<PcProbePoint> out(ks.size());
  std::vector<std::exception_ptr> errors(ks.size());
  const long long count = static_cast<long long>(ks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const std::size_t k = ks[i];
      std::vector<std::size_t> bottom(k);
      for (std::size_t j = 0; j < k; ++j) bottom[j] = d - k + j;
      const Matrix r = project(x, basis, bottom, ProjectionMode::reconstruct);
      Matrix train(split.train.size(), r.cols());
      for (std::size_t t = 0; t < split.train.size(); ++t) {
        train.row(static_cast<Eigen::Index>(t)) = r.row(static_cast<Eigen::Index>(split.train[t]));
      }
      Matrix eval(split.eval.size(), r.cols());
      for (std::size_t t = 0; t < split.eval.size(); ++t) {
        eval.row(static_cast<Eigen::Index>(t)) = r.row(static_cast<Eigen::Index>(split.eval[t]));
      }
      const LinearProbe probe = train_probe(train, y_train, cfg);
      out[i] = {k, eval_probe(probe, eval, y_eval)};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

nlohmann::ordered_json variance_profile_to_json(const VarianceProfile& v) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["dim"] = v.ratios.size();
  j["top2_share"] = v.top2_share;
  j["ratios"] = v.ratios;
  return j;
}

std::string variance_profile_to_csv(const VarianceProfile& v) {
  CsvWriter csv({"component", "ratio", "cumulative"});
  double cum = 0.0;
  for (std::size_t i = 0; i < v.ratios.size(); ++i) {
    cum += v.ratios[i];
    csv.row({std::to_string(i + 1), fixed6(v.ratios[i]), fixed6(cum)});
  }
  return csv.str();
}

nlohmann::ordered_json pc_probe_curve_to_json(const std::vector<PcProbePoint>& curve) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["subspace"] = "bottom-k principal axes, basis fitted on the training rows";
  auto points = nlohmann::ordered_json::array();
  for (const auto& p : curve) {
    nlohmann::ordered_json e;
    e["k"] = p.k;
    e["macro_f1"] = p.metrics.macro_f1;
    e["accuracy"] = p.metrics.accuracy;
    e["warnings"] = p.metrics.warnings;
    points.push_back(std::move(e));
  }
  j["points"] = std::move(points);
  return j;
}

std::string pc_probe_curve_to_csv(const std::vector<PcProbePoint>& curve) {
  CsvWriter csv({"k", "macro_f1", "accuracy"});
  for (const auto& p : curve) csv.row({std::to_string(p.k), fixed6(p.metrics.macro_f1), fixed6(p.metrics.accuracy)});
  return csv.str();
}

}  // namespace featurescope
