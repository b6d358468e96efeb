#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace featurescope {

/// n×d activation matrix for one (layer, checkpoint, split) cell. Row-major,
/// 32-bit storage. Shape is enforced on construction; finiteness is checked
/// where matrices cross a file boundary (see validate_finite).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  float operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  float& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const float> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<float> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  /// Rows at `indices`, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;
  /// Throws ValidationError naming the first non-finite entry.
  void validate_finite() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

}  // namespace featurescope
