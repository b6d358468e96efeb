#include "featurescope/feature_matrix.hpp"

#include <cmath>
#include <string>

#include "featurescope/error.hpp"

namespace featurescope {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : FeatureMatrix(rows, cols, std::vector<float>(rows * cols, 0.0f)) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ < 1 || cols_ < 1) {
    throw ValidationError("feature matrix must have at least one row and one column");
  }
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("feature matrix value count " + std::to_string(values_.size()) +
                          " does not match shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ValidationError("row selection is empty");
  std::vector<float> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t idx : indices) {
    if (idx >= rows_) {
      throw ValidationError("row index " + std::to_string(idx) + " out of range");
    }
    auto r = row(idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return FeatureMatrix(indices.size(), cols_, std::move(out));
}

bool FeatureMatrix::all_finite() const {
  for (float v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void FeatureMatrix::validate_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("non-finite value at row " + std::to_string(i / cols_) +
                            ", column " + std::to_string(i % cols_));
    }
  }
}

}  // namespace featurescope
