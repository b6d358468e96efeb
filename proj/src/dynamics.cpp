#include "featurescope/dynamics.hpp"

#include "featurescope/error.hpp"
#include "featurescope/format.hpp"
#include "featurescope/kernels.hpp"

namespace featurescope {

namespace {

constexpr std::size_t kTop2[] = {0, 1};

Projection2D make_projection(const Matrix& x, const LabelVector& labels, const PcaModel& model, int layer,
                             std::string checkpoint) {
  Projection2D p;
  p.points = project(x, model, kTop2, ProjectionMode::reduce);
  p.labels = labels;
  p.layer = layer;
  p.checkpoint = std::move(checkpoint);
  return p;
}

void check_cell(const FeatureMatrix& features, const LabelVector& labels) {
  if (features.rows() != labels.size()) throw ValidationError("cell rows and labels differ in length");
  if (features.rows() < 3) throw DegenerateInputError("projection needs at least 3 rows");
}

}  // namespace

Projection2D project_cell(const FeatureMatrix& features, const LabelVector& labels, int layer,
                          std::string checkpoint) {
  check_cell(features, labels);
  const Matrix x = to_dense(features);
  const PcaModel model = pca_fit(x, 2);
  Projection2D p = make_projection(x, labels, model, layer, std::move(checkpoint));
  p.variance_ratios = {model.explained_variance_ratio(0), model.explained_variance_ratio(1)};
  return p;
}

Projection2D project_cell_with_basis(const FeatureMatrix& features, const LabelVector& labels,
                                     const PcaModel& basis, int layer, std::string checkpoint) {
  check_cell(features, labels);
  if (basis.k() < 2) throw ValidationError("shared basis needs two components");
  const Matrix x = to_dense(features);
  // Variance shares are measured against this cell's own total variance.
  const Centered c = center(x);
  const double total = c.data.squaredNorm();
  if (total <= 0.0) throw DegenerateGeometryError("cell has zero variance");
  Projection2D p = make_projection(x, labels, basis, layer, std::move(checkpoint));
  const Matrix centered_points = p.points.rowwise() - p.points.colwise().mean();
  p.variance_ratios = {centered_points.col(0).squaredNorm() / total, centered_points.col(1).squaredNorm() / total};
  return p;
}

double silhouette_score(const Matrix& points, const LabelVector& labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n != labels.size()) throw ValidationError("silhouette: points and labels differ in length");
  std::size_t present = 0;
  for (std::size_t c : labels.class_counts()) present += c > 0 ? 1 : 0;
  if (present < 2) throw ValidationError("silhouette needs at least two classes present");
  const auto dim = static_cast<std::size_t>(points.cols());
  std::vector<double> rows(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) rows[i * dim + j] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  std::vector<double> s(n);
  kernels::silhouette_omp(rows, n, dim, labels.codes(), labels.class_count(), s);
  double sum = 0.0;
  for (double v : s) sum += v;
  return sum / static_cast<double>(n);
}

double disambiguation_score(const Projection2D& p) { return silhouette_score(p.points, p.labels); }

DisambiguationSummary summarize(const DynamicsGrid& grid, double threshold) {
  DisambiguationSummary s;
  s.threshold = threshold;
  for (std::size_t li = 0; li < grid.layers.size(); ++li) {
    std::optional<std::string> first;
    for (std::size_t ci = 0; ci < grid.checkpoints.size(); ++ci) {
      const auto& cell = grid.cell(li, ci);
      if (cell.score && *cell.score >= threshold) {
        first = cell.checkpoint;
        break;
      }
    }
    s.per_layer_epoch.emplace_back(grid.layers[li], first);
  }
  return s;
}

std::pair<DynamicsGrid, DisambiguationSummary> compute_grid(const RunHandle& run, const std::string& split,
                                                            const DynamicsOptions& options) {
  const LabelVector& labels = run.labels(split);
  DynamicsGrid grid;
  grid.run_id = run.manifest().run_id;
  grid.split = split;
  grid.layers = run.manifest().layers;
  grid.checkpoints = run.manifest().checkpoints;
  const std::size_t n_ckpt = grid.checkpoints.size();
  grid.cells.resize(grid.layers.size() * n_ckpt);

  std::vector<std::optional<PcaModel>> shared(grid.layers.size());
  std::vector<std::string> shared_error(grid.layers.size());
  if (options.basis == BasisMode::shared_final) {
    const long long layers = static_cast<long long>(grid.layers.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long long li = 0; li < layers; ++li) {
      const auto l = static_cast<std::size_t>(li);
      try {
        shared[l] = pca_fit(run.matrix(grid.layers[l], grid.checkpoints.back(), split), 2);
      } catch (const std::exception& e) {
        shared_error[l] = e.what();
      }
    }
  }

  const long long total = static_cast<long long>(grid.cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long idx = 0; idx < total; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    auto& cell = grid.cells[i];
    const std::size_t li = i / n_ckpt;
    cell.layer = grid.layers[li];
    cell.checkpoint = grid.checkpoints[i % n_ckpt];
    try {
      const FeatureMatrix f = run.matrix(cell.layer, cell.checkpoint, split);
      if (options.basis == BasisMode::shared_final) {
        if (!shared[li]) throw DegenerateGeometryError("shared basis unavailable: " + shared_error[li]);
        cell.projection = project_cell_with_basis(f, labels, *shared[li], cell.layer, cell.checkpoint);
      } else {
        cell.projection = project_cell(f, labels, cell.layer, cell.checkpoint);
      }
      cell.score = disambiguation_score(*cell.projection);
      cell.status = "ok";
    } catch (const std::exception& e) {
      cell.status = std::string("failed: ") + e.what();
    }
  }
  DisambiguationSummary summary = summarize(grid, options.threshold);
  return {std::move(grid), std::move(summary)};
}

std::string dynamics_grid_to_csv(const DynamicsGrid& grid) {
  CsvWriter csv({"layer", "checkpoint", "score", "var_ratio_1", "var_ratio_2"});
  for (const auto& cell : grid.cells) {
    const bool ok = cell.score.has_value();
    csv.row({std::to_string(cell.layer), cell.checkpoint, ok ? fixed6(*cell.score) : "",
             ok ? fixed6(cell.projection->variance_ratios[0]) : "",
             ok ? fixed6(cell.projection->variance_ratios[1]) : ""});
  }
  return csv.str();
}

nlohmann::ordered_json dynamics_summary_to_json(const DynamicsGrid& grid, const DisambiguationSummary& s,
                                                const DynamicsOptions& options) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["run_id"] = grid.run_id;
  j["split"] = grid.split;
  j["basis"] = options.basis == BasisMode::per_cell ? "per_cell" : "shared_final";
  j["threshold"] = s.threshold;
  j["score"] = "mean silhouette of the per-cell top-2 PCA projection";
  auto per_layer = nlohmann::ordered_json::array();
  for (const auto& [layer, tag] : s.per_layer_epoch) {
    nlohmann::ordered_json e;
    e["layer"] = layer;
    e["first_checkpoint"] = tag ? nlohmann::ordered_json(*tag) : nlohmann::ordered_json();
    per_layer.push_back(std::move(e));
  }
  j["disambiguation"] = std::move(per_layer);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& cell : grid.cells) {
    nlohmann::ordered_json e;
    e["layer"] = cell.layer;
    e["checkpoint"] = cell.checkpoint;
    e["score"] = cell.score ? nlohmann::ordered_json(*cell.score) : nlohmann::ordered_json();
    e["status"] = cell.status;
    cells.push_back(std::move(e));
  }
  j["cells"] = std::move(cells);
  return j;
}

}  // namespace featurescope
