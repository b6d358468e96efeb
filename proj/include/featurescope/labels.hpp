#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace featurescope {

/// Per-sample class labels with a fixed class order. Class indices follow
/// class_set order, which defaults to first appearance.
class LabelVector {
 public:
  LabelVector() = default;
  /// class_set = first-appearance order of `labels`.
  explicit LabelVector(std::vector<std::string> labels);
  /// Explicit class order; every label must be a member of `class_set`.
  LabelVector(std::vector<std::string> labels, std::vector<std::string> class_set);

  std::size_t size() const { return labels_.size(); }
  std::size_t class_count() const { return class_set_.size(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& class_set() const { return class_set_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  std::size_t class_index(std::size_t i) const { return codes_[i]; }
  std::span<const std::size_t> codes() const { return codes_; }

  /// Throws ValidationError if `name` is not in class_set.
  std::size_t index_of(const std::string& name) const;

  std::vector<std::size_t> class_counts() const;

  /// Subset of samples; keeps the class_set unchanged.
  LabelVector subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabelVector& a, const LabelVector& b) {
    return a.labels_ == b.labels_ && a.class_set_ == b.class_set_;
  }

 private:
  void encode();

  std::vector<std::string> labels_;
  std::vector<std::string> class_set_;
  std::vector<std::size_t> codes_;
};

/// One label per line, UTF-8. A final trailing newline is optional; a trailing
/// '\r' is stripped. Blank labels are rejected.
LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<std::string>& labels, const std::filesystem::path& path);

}  // namespace featurescope
