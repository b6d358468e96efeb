#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featurescope/feature_matrix.hpp"

namespace featurescope {

// Analyses accumulate in double even though FAM storage is 32-bit.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix to_dense(const FeatureMatrix& m);
/// Narrowing copy back to 32-bit storage.
FeatureMatrix to_feature_matrix(const Matrix& m);

struct Centered {
  Matrix data;
  Vector mean;
};

Centered center(const FeatureMatrix& m);
Centered center(const Matrix& m);

/// Principal axes of a centered matrix. Component rows are orthonormal and
/// ordered by decreasing variance; each row's largest-magnitude entry is
/// positive (lowest index wins ties). Ratios are relative to the variance
/// over all d axes, so a truncated model's ratios sum to at most 1.
struct PcaModel {
  Vector mean;                      // d
  Matrix components;                // k × d
  Vector explained_variance;        // k, sample variance (divisor rows-1)
  Vector explained_variance_ratio;  // k

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(components.cols()); }
};

/// Top-k model. Requires rows >= 2 (DegenerateInputError) and
/// 1 <= k <= min(rows-1, cols) (ValidationError); an all-zero centered
/// matrix raises DegenerateGeometryError.
PcaModel pca_fit(const FeatureMatrix& m, std::size_t k);
PcaModel pca_fit(const Matrix& m, std::size_t k);

/// All d axes, including null-space directions when rows-1 < d. Used where
/// bottom components matter (variance profiles, PC probing).
PcaModel pca_basis(const Matrix& m);

/// Explained-variance ratios of all d axes, descending; no eigenvectors.
Vector pca_spectrum(const Matrix& m);

enum class ProjectionMode {
  reduce,       // (x - mean) · Sᵀ, one column per selected component
  reconstruct,  // (x - mean) · Sᵀ · S, back in R^d
};

/// `indices` select component rows of `model`; must be non-empty, distinct
/// and < model.k().
Matrix project(const Matrix& m, const PcaModel& model, std::span<const std::size_t> indices,
               ProjectionMode mode);
Matrix project(const FeatureMatrix& m, const PcaModel& model, std::span<const std::size_t> indices,
               ProjectionMode mode);

enum class Metric { euclidean, cosine };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

/// Symmetric n×n distance matrix with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> values() const { return values_; }

  /// Strict upper triangle, row-major: (0,1), (0,2), ..., (1,2), ...
  std::vector<double> upper_strict() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// euclidean: ‖xi − xj‖₂; cosine: 1 − xi·xj / (‖xi‖‖xj‖). Rows of zero norm
/// under cosine raise DegenerateGeometryError.
DistanceMatrix pairwise_distances(const FeatureMatrix& m, Metric metric);
DistanceMatrix pairwise_distances(const Matrix& m, Metric metric);

/// Pearson correlation, two-pass in double, clamped to [-1, 1]. A (near-)
/// constant argument raises DegenerateGeometryError instead of yielding NaN.
double pearson(std::span<const double> u, std::span<const double> v);

}  // namespace featurescope
