#include "featurescope/numerics.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "featurescope/error.hpp"
#include "featurescope/kernels.hpp"

namespace featurescope {

Matrix to_dense(const FeatureMatrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

FeatureMatrix to_feature_matrix(const Matrix& m) {
  FeatureMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = static_cast<float>(m(i, j));
    }
  }
  return out;
}

Centered center(const Matrix& m) {
  Centered c;
  c.mean = m.colwise().mean().transpose();
  c.data = m.rowwise() - c.mean.transpose();
  return c;
}

Centered center(const FeatureMatrix& m) { return center(to_dense(m)); }

namespace {

void fix_sign(Eigen::RowVectorXd& row) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double a = std::abs(row(j));
    if (a > best_abs) {  // strict: lowest index wins ties
      best_abs = a;
      best = j;
    }
  }
  if (row(best) < 0.0) row = -row;
}

}  // namespace

namespace {

// Scatter matrix (lower triangle) of the centered rows.
Matrix scatter(const Centered& c) {
  const Eigen::Index d = c.data.cols();
  Matrix cov = Matrix::Zero(d, d);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(c.data.transpose());
  if (cov.diagonal().sum() <= 0.0) {
    throw DegenerateGeometryError("PCA input has zero variance after centering");
  }
  return cov;
}

// Largest k eigenvalues of the scatter (ascending). Householder reduction to
// tridiagonal form in Eigen, then LAPACK's MRRR solver (dstemr) on the
// tridiagonal for just the wanted pairs; the matching eigenvectors go to
// `vectors` unless it is null.
Vector top_eigen(const Matrix& cov, Eigen::Index k, Matrix* vectors) {
  Eigen::Tridiagonalization<Matrix> tri(cov);
  const auto d = static_cast<lapack_int>(cov.rows());
  const auto kk = static_cast<lapack_int>(k);
  Vector diag = tri.diagonal();
  Vector off = Vector::Zero(d);  // dstemr wants length d
  off.head(d - 1) = tri.subDiagonal();
  Vector w(d);
  Matrix z(vectors ? d : 1, vectors ? kk : 1);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(d));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const lapack_int info =
      LAPACKE_dstemr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', kk == d ? 'A' : 'I', d, diag.data(), off.data(), 0.0,
                     0.0, d - kk + 1, d, &found, w.data(), z.data(), static_cast<lapack_int>(z.rows()),
                     vectors ? kk : 1, support.data(), &tryrac);
  if (info != 0 || found != kk) {
    throw DegenerateGeometryError("eigen-decomposition failed (info " + std::to_string(info) + ")");
  }
  if (vectors) *vectors = tri.matrixQ() * z;
  return w.head(k);
}

PcaModel fit_top(const Matrix& m, Eigen::Index k) {
  const Centered c = center(m);
  const Matrix cov = scatter(c);
  const double total = cov.diagonal().sum();
  Matrix evecs;
  const Vector evals = top_eigen(cov, k, &evecs);

  PcaModel model;
  model.mean = c.mean;
  model.components.resize(k, m.cols());
  model.explained_variance.resize(k);
  model.explained_variance_ratio.resize(k);
  const double dof = static_cast<double>(m.rows() - 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = k - 1 - i;
    Eigen::RowVectorXd axis = evecs.col(src).transpose();
    fix_sign(axis);
    model.components.row(i) = axis;
    const double lambda = std::max(evals(src), 0.0);
    model.explained_variance(i) = lambda / dof;
    model.explained_variance_ratio(i) = lambda / total;
  }
  return model;
}

}  // namespace

PcaModel pca_basis(const Matrix& m) {
  if (m.rows() < 2) throw DegenerateInputError("PCA needs at least 2 rows");
  return fit_top(m, m.cols());
}

Vector pca_spectrum(const Matrix& m) {
  if (m.rows() < 2) throw DegenerateInputError("PCA needs at least 2 rows");
  const Matrix cov = scatter(center(m));
  const double total = cov.diagonal().sum();
  const Vector evals = top_eigen(cov, cov.rows(), nullptr);
  Vector ratios(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) ratios(i) = std::max(evals(evals.size() - 1 - i), 0.0) / total;
  return ratios;
}

PcaModel pca_fit(const Matrix& m, std::size_t k) {
  if (m.rows() < 2) throw DegenerateInputError("PCA needs at least 2 rows");
  const auto limit = static_cast<std::size_t>(std::min<Eigen::Index>(m.rows() - 1, m.cols()));
  if (k < 1 || k > limit) {
    throw ValidationError("PCA rank k=" + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
  }
  return fit_top(m, static_cast<Eigen::Index>(k));
}

PcaModel pca_fit(const FeatureMatrix& m, std::size_t k) { return pca_fit(to_dense(m), k); }

Matrix project(const Matrix& m, const PcaModel& model, std::span<const std::size_t> indices,
               ProjectionMode mode) {
  if (indices.empty()) throw ValidationError("projection needs at least one component");
  if (static_cast<std::size_t>(m.cols()) != model.dim()) {
    throw ValidationError("projection input has " + std::to_string(m.cols()) + " columns, model has " +
                          std::to_string(model.dim()));
  }
  std::set<std::size_t> seen;
  Matrix selected(static_cast<Eigen::Index>(indices.size()), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= model.k()) {
      throw ValidationError("component index " + std::to_string(indices[r]) + " >= fitted k " +
                            std::to_string(model.k()));
    }
    if (!seen.insert(indices[r]).second) throw ValidationError("duplicate component index");
    selected.row(static_cast<Eigen::Index>(r)) = model.components.row(static_cast<Eigen::Index>(indices[r]));
  }
  const Matrix centered = m.rowwise() - model.mean.transpose();
  Matrix coords = centered * selected.transpose();
  if (mode == ProjectionMode::reduce) return coords;
  return coords * selected;
}

Matrix project(const FeatureMatrix& m, const PcaModel& model, std::span<const std::size_t> indices,
               ProjectionMode mode) {
  return project(to_dense(m), model, indices, mode);
}

std::string to_string(Metric metric) { return metric == Metric::euclidean ? "euclidean" : "cosine"; }

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw ValidationError("unknown metric '" + name + "' (expected euclidean or cosine)");
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n_ * n_) throw ValidationError("distance matrix size mismatch");
}

std::vector<double> DistanceMatrix::upper_strict() const {
  std::vector<double> out;
  out.reserve(n_ * (n_ - 1) / 2);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) out.push_back(values_[i * n_ + j]);
  }
  return out;
}

namespace {

DistanceMatrix distances_row_major(std::vector<double> x, std::size_t n, std::size_t d, Metric metric) {
  std::vector<double> out(n * n, 0.0);
  if (metric == Metric::euclidean) {
    kernels::pairwise_euclidean_omp(x, n, d, out);
  } else {
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
      norms[i] = std::sqrt(kernels::dot(x.data() + i * d, x.data() + i * d, d));
      if (norms[i] == 0.0) {
        throw DegenerateGeometryError("row " + std::to_string(i) + " has zero norm under cosine distance");
      }
    }
    kernels::pairwise_cosine_omp(x, norms, n, d, out);
  }
  return DistanceMatrix(n, std::move(out));
}

}  // namespace

DistanceMatrix pairwise_distances(const FeatureMatrix& m, Metric metric) {
  std::vector<double> x(m.values().begin(), m.values().end());
  return distances_row_major(std::move(x), m.rows(), m.cols(), metric);
}

DistanceMatrix pairwise_distances(const Matrix& m, Metric metric) {
  const auto n = static_cast<std::size_t>(m.rows());
  const auto d = static_cast<std::size_t>(m.cols());
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return distances_row_major(std::move(x), n, d, metric);
}

double pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("pearson: length mismatch");
  if (u.size() < 2) throw ValidationError("pearson: need at least 2 observations");
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suv = 0.0, suu = 0.0, svv = 0.0, max_du = 0.0, max_dv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    suv += du * dv;
    suu += du * du;
    svv += dv * dv;
    max_du = std::max(max_du, std::abs(du));
    max_dv = std::max(max_dv, std::abs(dv));
  }
  // Spread below 1e-12 relative to the mean is rounding noise, not signal.
  if (max_du <= 1e-12 * std::abs(mu) || suu == 0.0) {
    throw DegenerateGeometryError("pearson: first argument has zero variance");
  }
  if (max_dv <= 1e-12 * std::abs(mv) || svv == 0.0) {
    throw DegenerateGeometryError("pearson: second argument has zero variance");
  }
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

}  // namespace featurescope
