#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/labels.hpp"
#include "featurescope/manifest.hpp"
#include "featurescope/numerics.hpp"

namespace featurescope {

struct Projection2D {
  Matrix points;  // n × 2
  LabelVector labels;
  int layer = 0;
  std::string checkpoint;
  std::array<double, 2> variance_ratios{0.0, 0.0};
};

/// Top-2 PCA projection of one cell, fitted on that cell alone. rows >= 3.
Projection2D project_cell(const FeatureMatrix& features, const LabelVector& labels, int layer = 0,
                          std::string checkpoint = {});
/// Projection onto an externally fitted two-component basis.
Projection2D project_cell_with_basis(const FeatureMatrix& features, const LabelVector& labels,
                                     const PcaModel& basis, int layer = 0, std::string checkpoint = {});

/// Mean silhouette coefficient (Euclidean) of `points` grouped by label.
/// Needs at least two classes present.
double silhouette_score(const Matrix& points, const LabelVector& labels);

/// How cleanly the classes separate in the projection, in [-1, 1].
double disambiguation_score(const Projection2D& p);

enum class BasisMode {
  per_cell,      // fresh PCA for every (layer, checkpoint)
  shared_final,  // each layer projected on the basis of its last checkpoint
};

struct DynamicsOptions {
  double threshold = 0.4;
  BasisMode basis = BasisMode::per_cell;
};

struct DynamicsCell {
  int layer = 0;
  std::string checkpoint;
  std::optional<Projection2D> projection;
  std::optional<double> score;
  std::string status;
};

struct DynamicsGrid {
  std::string run_id;
  std::string split;
  std::vector<int> layers;
  std::vector<std::string> checkpoints;
  std::vector<DynamicsCell> cells;  // layer-major, then manifest checkpoint order

  const DynamicsCell& cell(std::size_t layer_pos, std::size_t checkpoint_pos) const {
    return cells[layer_pos * checkpoints.size() + checkpoint_pos];
  }
};

struct DisambiguationSummary {
  double threshold = 0.4;
  // First checkpoint (manifest order) per layer whose score reaches the threshold.
  std::vector<std::pair<int, std::optional<std::string>>> per_layer_epoch;
};

/// Fills every lattice cell of `split` (cells run in parallel; failures are
/// recorded per cell) and derives the per-layer disambiguation checkpoint.
std::pair<DynamicsGrid, DisambiguationSummary> compute_grid(const RunHandle& run, const std::string& split,
                                                            const DynamicsOptions& options = {});

DisambiguationSummary summarize(const DynamicsGrid& grid, double threshold);

/// Columns: layer,checkpoint,score,var_ratio_1,var_ratio_2 (empty fields for failed cells).
std::string dynamics_grid_to_csv(const DynamicsGrid& grid);
nlohmann::ordered_json dynamics_summary_to_json(const DynamicsGrid& grid, const DisambiguationSummary& s,
                                                const DynamicsOptions& options);

}  // namespace featurescope
