#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/labels.hpp"
#include "featurescope/manifest.hpp"
#include "featurescope/numerics.hpp"

namespace featurescope {

enum class Axis { pc1, pc2 };
std::string to_string(Axis a);

struct IntervalCluster {
  Axis axis = Axis::pc1;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t member_count = 0;
};

struct Clustering1D {
  std::vector<IntervalCluster> clusters;  // sorted by lo
  std::vector<std::size_t> assignment;    // per value, index into clusters
  bool collapsed = false;                 // some of the m clusters ended empty
  double sse = 0.0;
};

/// 1-D k-means with k = m. Lloyd (at most 100 iterations) runs from centroids
/// at the (2i+1)/(2m) quantiles and from 10 k-means++ starts drawn from
/// `seed`; the lowest within-cluster sum of squares wins, the quantile start
/// on ties. Each interval is [min, max] of its members.
/// m must be in [1, number of distinct values].
Clustering1D cluster_1d(std::span<const double> values, std::size_t m, std::uint64_t seed, Axis axis = Axis::pc1);

struct ClusterRectangle {
  IntervalCluster pc1_interval;
  IntervalCluster pc2_interval;
  std::size_t pc1_order = 0;  // position in the PC1 cluster list
  std::size_t pc2_order = 0;
  // Membership bounds: the intervals, widened when a margin is requested.
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  std::size_t member_count = 0;
  std::string majority_label;  // empty without labels or members

  bool contains(double x, double y) const { return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi; }
};

/// Forms every PC1 × PC2 rectangle, counts the 2-D points inside each
/// (inclusive bounds) and keeps the n_final largest; ties go to the lower
/// (pc1_order, pc2_order). `margin` widens each side by that fraction of the
/// axis's data range. `points` is n × 2.
std::vector<ClusterRectangle> build_rectangles(const std::vector<IntervalCluster>& c1,
                                               const std::vector<IntervalCluster>& c2, const Matrix& points,
                                               std::size_t n_final, const LabelVector* labels = nullptr,
                                               double margin = 0.0);

struct OutlierSet {
  std::vector<std::size_t> sample_indices;  // sorted
  std::vector<ClusterRectangle> rectangles_used;
  std::string split;
};

/// Points inside no rectangle. `rects` must be non-empty.
OutlierSet extract_outliers(const Matrix& points, const std::vector<ClusterRectangle>& rects,
                            std::string split = {});

/// Euclidean distance from (x, y) to the closest rectangle (0 inside).
double nearest_rectangle_distance(double x, double y, const std::vector<ClusterRectangle>& rects);

struct OutlierOptions {
  std::optional<std::size_t> m1;  // default min(C, 3)
  std::optional<std::size_t> m2;  // default 1 if C = 2, else 3
  std::optional<std::size_t> n_final;  // default C
  double margin = 0.0;
  std::uint64_t seed = 0;
};

struct OutlierAnalysis {
  std::string run_id;
  int layer = 0;
  std::string checkpoint;
  LabelVector labels;
  Matrix points;  // n × 2 top-2 PCA projection
  Clustering1D pc1;
  Clustering1D pc2;
  std::size_t m1 = 0, m2 = 0, n_final = 0;
  double margin = 0.0;
  std::uint64_t seed = 0;
  OutlierSet outliers;
  std::vector<std::string> warnings;
};

/// Projects one cell onto its top-2 PCs and applies the rectangle rule.
OutlierAnalysis analyze_outliers(const FeatureMatrix& features, const LabelVector& labels,
                                 const OutlierOptions& options = {});
/// Same for a run cell; layer and checkpoint default to the last ones.
OutlierAnalysis analyze_outliers(const RunHandle& run, const std::string& split,
                                 std::optional<int> layer = std::nullopt,
                                 std::optional<std::string> checkpoint = std::nullopt,
                                 const OutlierOptions& options = {});

enum class OutlierCategory : int {
  unreviewed = 0,
  wrongly_labeled = 1,
  inconsistent = 2,
  multiple_sources = 3,
  not_reported_or_truncated = 4,
  boundary = 5,
};
std::string to_string(OutlierCategory c);
OutlierCategory category_from_int(long long v);

/// One worksheet line for expert review.
struct OutlierAnnotation {
  std::size_t sample_index = 0;
  std::string label;
  double pc1 = 0.0;
  double pc2 = 0.0;
  double nearest_rectangle_distance = 0.0;
  OutlierCategory category = OutlierCategory::unreviewed;
  std::string note;
};

/// Fresh worksheet, one unreviewed row per outlier. Categories and notes from
/// `previous` carry over by sample_index.
std::vector<OutlierAnnotation> outlier_worksheet(const OutlierAnalysis& a,
                                                 const std::vector<OutlierAnnotation>& previous = {});

/// Columns: sample_index,label,pc1,pc2,nearest_rectangle_distance,category,note.
std::string annotations_to_csv(const std::vector<OutlierAnnotation>& rows);
/// Parses an (edited) worksheet. Unknown categories, a wrong header or
/// malformed numbers raise ValidationError.
std::vector<OutlierAnnotation> annotations_from_csv(const std::string& text);
nlohmann::ordered_json annotations_to_json(const std::vector<OutlierAnnotation>& rows);

nlohmann::ordered_json outlier_analysis_to_json(const OutlierAnalysis& a);

}  // namespace featurescope
