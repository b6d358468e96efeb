#include "featurescope/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "featurescope/error.hpp"
#include "featurescope/format.hpp"
#include "featurescope/rng.hpp"

namespace featurescope {

namespace {

constexpr std::size_t kMaxIterations = 100;
constexpr std::size_t kRestarts = 10;

struct LloydResult {
  std::vector<std::size_t> assignment;  // per sorted value, index into centroids
  std::vector<double> centroids;        // ascending
  double sse = 0.0;
};

// Nearest centroid per sorted value; ties go to the lower centroid.
void assign(const std::vector<double>& sorted, const std::vector<double>& centroids,
            std::vector<std::size_t>& out) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Values ascend, so the nearest centroid index never decreases.
    while (c + 1 < centroids.size() &&
           std::abs(sorted[i] - centroids[c + 1]) < std::abs(sorted[i] - centroids[c])) {
      ++c;
    }
    out[i] = c;
  }
}

LloydResult lloyd(const std::vector<double>& sorted, std::vector<double> centroids) {
  const std::size_t m = centroids.size();
  std::sort(centroids.begin(), centroids.end());
  LloydResult r;
  r.assignment.assign(sorted.size(), 0);
  std::vector<std::size_t> next(sorted.size());
  assign(sorted, centroids, r.assignment);
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    std::vector<double> sum(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      sum[r.assignment[i]] += sorted[i];
      ++count[r.assignment[i]];
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centroids[a] < centroids[b]; });
    std::vector<double> reordered(m);
    for (std::size_t c = 0; c < m; ++c) reordered[c] = centroids[order[c]];
    centroids = std::move(reordered);
    assign(sorted, centroids, next);
    if (next == r.assignment) break;
    r.assignment.swap(next);
  }
  // Centroids consistent with the final assignment.
  std::vector<double> sum(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    sum[r.assignment[i]] += sorted[i];
    ++count[r.assignment[i]];
  }
  for (std::size_t c = 0; c < m; ++c) {
    if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double dev = sorted[i] - centroids[r.assignment[i]];
    r.sse += dev * dev;
  }
  r.centroids = std::move(centroids);
  return r;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

std::vector<double> kmeanspp_init(std::span<const double> values, std::size_t m, SplitMix64& rng) {
  std::vector<double> centroids;
  centroids.push_back(values[rng.bounded(values.size())]);
  std::vector<double> d2(values.size());
  while (centroids.size() < m) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centroids) best = std::min(best, (values[i] - c) * (values[i] - c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = values.size() - 1;
    for (std::size_t i = 0; i < values.size(); ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(values[pick]);
  }
  return centroids;
}

}  // namespace

std::string to_string(Axis a) { return a == Axis::pc1 ? "PC1" : "PC2"; }

Clustering1D cluster_1d(std::span<const double> values, std::size_t m, std::uint64_t seed, Axis axis) {
  if (m < 1) throw ValidationError("cluster_1d: m must be at least 1");
  if (values.size() < m) throw ValidationError("cluster_1d: fewer values than clusters");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("cluster_1d: non-finite value");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> sorted(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = values[order[i]];
  std::size_t n_distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) n_distinct += sorted[i] != sorted[i - 1] ? 1 : 0;
  if (m > n_distinct) {
    throw ValidationError("cluster_1d: m=" + std::to_string(m) + " exceeds the " + std::to_string(n_distinct) +
                          " distinct values");
  }

  std::vector<double> init(m);
  for (std::size_t i = 0; i < m; ++i) init[i] = quantile(sorted, (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(m)));
  LloydResult best = lloyd(sorted, init);
  if (m > 1) {
    for (std::size_t r = 0; r < kRestarts; ++r) {
      SplitMix64 rng = SplitMix64::stream(seed, {fnv1a64("kmeans++"), r});
      std::vector<double> start = kmeanspp_init(values, m, rng);
      if (start.size() < m) continue;
      LloydResult cand = lloyd(sorted, std::move(start));
      if (cand.sse < best.sse * (1.0 - 1e-12) - 1e-300) best = std::move(cand);
    }
  }

  Clustering1D out;
  out.sse = best.sse;
  std::vector<std::size_t> remap(m, m);
  std::vector<IntervalCluster> clusters;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t c = best.assignment[i];
    if (remap[c] == m) {
      remap[c] = clusters.size();
      clusters.push_back({axis, sorted[i], sorted[i], 0});
    }
    auto& cl = clusters[remap[c]];
    cl.hi = sorted[i];
    ++cl.member_count;
  }
  out.collapsed = clusters.size() < m;
  out.clusters = std::move(clusters);
  out.assignment.assign(values.size(), 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) out.assignment[order[i]] = remap[best.assignment[i]];
  return out;
}

std::vector<ClusterRectangle> build_rectangles(const std::vector<IntervalCluster>& c1,
                                               const std::vector<IntervalCluster>& c2, const Matrix& points,
                                               std::size_t n_final, const LabelVector* labels, double margin) {
  if (c1.empty() || c2.empty()) throw ValidationError("build_rectangles: empty cluster list");
  if (n_final < 1 || n_final > c1.size() * c2.size()) {
    throw ValidationError("build_rectangles: n_final=" + std::to_string(n_final) + " outside [1, " +
                          std::to_string(c1.size() * c2.size()) + "]");
  }
  if (points.cols() != 2) throw ValidationError("build_rectangles: points must have two columns");
  if (labels && labels->size() != static_cast<std::size_t>(points.rows())) {
    throw ValidationError("build_rectangles: labels and points differ in length");
  }
  if (!(margin >= 0.0)) throw ValidationError("build_rectangles: margin must be non-negative");
  double wx = 0.0, wy = 0.0;
  if (points.rows() > 0 && margin > 0.0) {
    wx = margin * (points.col(0).maxCoeff() - points.col(0).minCoeff());
    wy = margin * (points.col(1).maxCoeff() - points.col(1).minCoeff());
  }

  std::vector<ClusterRectangle> rects;
  rects.reserve(c1.size() * c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) {
    for (std::size_t j = 0; j < c2.size(); ++j) {
      ClusterRectangle r;
      r.pc1_interval = c1[i];
      r.pc2_interval = c2[j];
      r.pc1_order = i;
      r.pc2_order = j;
      r.x_lo = c1[i].lo - wx;
      r.x_hi = c1[i].hi + wx;
      r.y_lo = c2[j].lo - wy;
      r.y_hi = c2[j].hi + wy;
      std::vector<std::size_t> votes(labels ? labels->class_count() : 0, 0);
      for (Eigen::Index p = 0; p < points.rows(); ++p) {
        if (!r.contains(points(p, 0), points(p, 1))) continue;
        ++r.member_count;
        if (labels) ++votes[labels->class_index(static_cast<std::size_t>(p))];
      }
      if (labels && r.member_count > 0) {
        const auto top = std::max_element(votes.begin(), votes.end());  // first maximum
        r.majority_label = labels->class_set()[static_cast<std::size_t>(top - votes.begin())];
      }
      rects.push_back(std::move(r));
    }
  }
  // Formation order is (pc1_order, pc2_order), so a stable sort keeps the tie-break.
  std::stable_sort(rects.begin(), rects.end(),
                   [](const ClusterRectangle& a, const ClusterRectangle& b) { return a.member_count > b.member_count; });
  rects.resize(n_final);
  return rects;
}

OutlierSet extract_outliers(const Matrix& points, const std::vector<ClusterRectangle>& rects, std::string split) {
  if (rects.empty()) throw ValidationError("extract_outliers: no rectangles");
  if (points.cols() != 2) throw ValidationError("extract_outliers: points must have two columns");
  OutlierSet out;
  out.split = std::move(split);
  out.rectangles_used = rects;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const bool inside = std::any_of(rects.begin(), rects.end(),
                                    [&](const ClusterRectangle& r) { return r.contains(points(p, 0), points(p, 1)); });
    if (!inside) out.sample_indices.push_back(static_cast<std::size_t>(p));
  }
  return out;
}

double nearest_rectangle_distance(double x, double y, const std::vector<ClusterRectangle>& rects) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rects) {
    const double dx = std::max({r.x_lo - x, 0.0, x - r.x_hi});
    const double dy = std::max({r.y_lo - y, 0.0, y - r.y_hi});
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

OutlierAnalysis analyze_outliers(const FeatureMatrix& features, const LabelVector& labels,
                                 const OutlierOptions& options) {
  if (features.rows() != labels.size()) throw ValidationError("outliers: features and labels differ in length");
  if (features.rows() < 3) throw DegenerateInputError("outliers: need at least 3 rows");
  const std::size_t n_classes = labels.class_count();
  OutlierAnalysis a;
  a.labels = labels;
  a.m1 = options.m1.value_or(std::min<std::size_t>(n_classes, 3));
  a.m2 = options.m2.value_or(n_classes == 2 ? 1 : 3);
  a.n_final = options.n_final.value_or(n_classes);
  a.margin = options.margin;
  a.seed = options.seed;

  const Matrix x = to_dense(features);
  const PcaModel model = pca_fit(x, 2);
  const std::size_t top2[] = {0, 1};
  a.points = project(x, model, top2, ProjectionMode::reduce);

  std::vector<double> v1(a.points.col(0).data(), a.points.col(0).data() + a.points.rows());
  std::vector<double> v2(a.points.col(1).data(), a.points.col(1).data() + a.points.rows());
  a.pc1 = cluster_1d(v1, a.m1, options.seed, Axis::pc1);
  a.pc2 = cluster_1d(v2, a.m2, options.seed, Axis::pc2);
  if (a.pc1.collapsed) a.warnings.push_back("PC1 clustering collapsed to " + std::to_string(a.pc1.clusters.size()) + " clusters");
  if (a.pc2.collapsed) a.warnings.push_back("PC2 clustering collapsed to " + std::to_string(a.pc2.clusters.size()) + " clusters");
  const std::size_t available = a.pc1.clusters.size() * a.pc2.clusters.size();
  std::size_t n_final = a.n_final;
  if (n_final > available) {
    a.warnings.push_back("n_final reduced from " + std::to_string(n_final) + " to " + std::to_string(available));
    n_final = available;
  }
  const auto rects = build_rectangles(a.pc1.clusters, a.pc2.clusters, a.points, n_final, &labels, options.margin);
  a.outliers = extract_outliers(a.points, rects);
  return a;
}

OutlierAnalysis analyze_outliers(const RunHandle& run, const std::string& split, std::optional<int> layer,
                                 std::optional<std::string> checkpoint, const OutlierOptions& options) {
  const int l = layer.value_or(run.manifest().layers.back());
  const std::string c = checkpoint.value_or(run.manifest().checkpoints.back());
  run.require_cell(l, c, split);
  OutlierAnalysis a = analyze_outliers(run.matrix(l, c, split), run.labels(split), options);
  a.run_id = run.manifest().run_id;
  a.layer = l;
  a.checkpoint = c;
  a.outliers.split = split;
  return a;
}

std::string to_string(OutlierCategory c) {
  switch (c) {
    case OutlierCategory::unreviewed: return "unreviewed";
    case OutlierCategory::wrongly_labeled: return "wrongly_labeled";
    case OutlierCategory::inconsistent: return "inconsistent";
    case OutlierCategory::multiple_sources: return "multiple_sources";
    case OutlierCategory::not_reported_or_truncated: return "not_reported_or_truncated";
    case OutlierCategory::boundary: return "boundary";
  }
  return "unknown";
}

OutlierCategory category_from_int(long long v) {
  if (v < 0 || v > 5) throw ValidationError("outlier category " + std::to_string(v) + " outside 0..5");
  return static_cast<OutlierCategory>(v);
}

std::vector<OutlierAnnotation> outlier_worksheet(const OutlierAnalysis& a,
                                                 const std::vector<OutlierAnnotation>& previous) {
  std::vector<OutlierAnnotation> rows;
  for (std::size_t idx : a.outliers.sample_indices) {
    OutlierAnnotation row;
    row.sample_index = idx;
    row.label = a.labels.label(idx);
    row.pc1 = a.points(static_cast<Eigen::Index>(idx), 0);
    row.pc2 = a.points(static_cast<Eigen::Index>(idx), 1);
    row.nearest_rectangle_distance = nearest_rectangle_distance(row.pc1, row.pc2, a.outliers.rectangles_used);
    for (const auto& p : previous) {
      if (p.sample_index == idx) {
        row.category = p.category;
        row.note = p.note;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

const std::vector<std::string> kAnnotationHeader = {"sample_index", "label", "pc1", "pc2",
                                                    "nearest_rectangle_distance", "category", "note"};

long long parse_integer(const std::string& s, const char* what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw ValidationError(std::string("annotation ") + what + " is not an integer: '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw ValidationError(std::string("annotation ") + what + " is not a number: '" + s + "'");
  return v;
}

}  // namespace

std::string annotations_to_csv(const std::vector<OutlierAnnotation>& rows) {
  CsvWriter csv(kAnnotationHeader);
  for (const auto& r : rows) {
    csv.row({std::to_string(r.sample_index), r.label, fixed6(r.pc1), fixed6(r.pc2),
             fixed6(r.nearest_rectangle_distance), std::to_string(static_cast<int>(r.category)), r.note});
  }
  return csv.str();
}

std::vector<OutlierAnnotation> annotations_from_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  try {
    records = parse_csv(text);
  } catch (const FormatError& e) {
    throw ValidationError(std::string("annotation CSV: ") + e.what());
  }
  if (records.empty() || records[0] != kAnnotationHeader) throw ValidationError("annotation CSV: unexpected header");
  std::vector<OutlierAnnotation> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != kAnnotationHeader.size()) {
      throw ValidationError("annotation CSV: record " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    }
    OutlierAnnotation r;
    const long long idx = parse_integer(f[0], "sample_index");
    if (idx < 0) throw ValidationError("annotation CSV: negative sample_index");
    r.sample_index = static_cast<std::size_t>(idx);
    r.label = f[1];
    r.pc1 = parse_real(f[2], "pc1");
    r.pc2 = parse_real(f[3], "pc2");
    r.nearest_rectangle_distance = parse_real(f[4], "nearest_rectangle_distance");
    r.category = category_from_int(parse_integer(f[5], "category"));
    r.note = f[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::ordered_json annotations_to_json(const std::vector<OutlierAnnotation>& rows) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  nlohmann::ordered_json legend;
  for (int c = 0; c <= 5; ++c) legend[std::to_string(c)] = to_string(static_cast<OutlierCategory>(c));
  j["categories"] = std::move(legend);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json e;
    e["sample_index"] = r.sample_index;
    e["label"] = r.label;
    e["pc1"] = r.pc1;
    e["pc2"] = r.pc2;
    e["nearest_rectangle_distance"] = r.nearest_rectangle_distance;
    e["category"] = static_cast<int>(r.category);
    e["note"] = r.note;
    arr.push_back(std::move(e));
  }
  j["annotations"] = std::move(arr);
  return j;
}

namespace {

nlohmann::ordered_json interval_json(const IntervalCluster& c) {
  nlohmann::ordered_json e;
  e["axis"] = to_string(c.axis);
  e["lo"] = c.lo;
  e["hi"] = c.hi;
  e["member_count"] = c.member_count;
  return e;
}

}  // namespace

nlohmann::ordered_json outlier_analysis_to_json(const OutlierAnalysis& a) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["run_id"] = a.run_id;
  j["layer"] = a.layer;
  j["checkpoint"] = a.checkpoint;
  j["split"] = a.outliers.split;
  j["m1"] = a.m1;
  j["m2"] = a.m2;
  j["n_final"] = a.n_final;
  j["margin"] = a.margin;
  j["seed"] = a.seed;
  auto pc1 = nlohmann::ordered_json::array();
  for (const auto& c : a.pc1.clusters) pc1.push_back(interval_json(c));
  auto pc2 = nlohmann::ordered_json::array();
  for (const auto& c : a.pc2.clusters) pc2.push_back(interval_json(c));
  j["pc1_clusters"] = std::move(pc1);
  j["pc2_clusters"] = std::move(pc2);
  auto rects = nlohmann::ordered_json::array();
  for (const auto& r : a.outliers.rectangles_used) {
    nlohmann::ordered_json e;
    e["pc1_cluster"] = r.pc1_order;
    e["pc2_cluster"] = r.pc2_order;
    e["x_lo"] = r.x_lo;
    e["x_hi"] = r.x_hi;
    e["y_lo"] = r.y_lo;
    e["y_hi"] = r.y_hi;
    e["member_count"] = r.member_count;
    e["majority_label"] = r.majority_label;
    rects.push_back(std::move(e));
  }
  j["rectangles"] = std::move(rects);
  j["outlier_count"] = a.outliers.sample_indices.size();
  j["outliers"] = a.outliers.sample_indices;
  j["warnings"] = a.warnings;
  return j;
}

}  // namespace featurescope
