#include "featurescope/labels.hpp"

#include <algorithm>

#include "featurescope/error.hpp"
#include "featurescope/fs_util.hpp"

namespace featurescope {

LabelVector::LabelVector(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (const auto& l : labels_) {
    if (std::find(class_set_.begin(), class_set_.end(), l) == class_set_.end()) {
      class_set_.push_back(l);
    }
  }
  encode();
}

LabelVector::LabelVector(std::vector<std::string> labels, std::vector<std::string> class_set)
    : labels_(std::move(labels)), class_set_(std::move(class_set)) {
  encode();
}

void LabelVector::encode() {
  if (class_set_.size() < 2) {
    throw ValidationError("label set needs at least 2 classes, found " +
                          std::to_string(class_set_.size()));
  }
  for (std::size_t i = 0; i < class_set_.size(); ++i) {
    for (std::size_t j = i + 1; j < class_set_.size(); ++j) {
      if (class_set_[i] == class_set_[j]) {
        throw ValidationError("duplicate class '" + class_set_[i] + "' in class set");
      }
    }
  }
  codes_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) codes_[i] = index_of(labels_[i]);
}

std::size_t LabelVector::index_of(const std::string& name) const {
  auto it = std::find(class_set_.begin(), class_set_.end(), name);
  if (it == class_set_.end()) throw ValidationError("label '" + name + "' is not in the class set");
  return static_cast<std::size_t>(it - class_set_.begin());
}

std::vector<std::size_t> LabelVector::class_counts() const {
  std::vector<std::size_t> counts(class_set_.size(), 0);
  for (std::size_t c : codes_) ++counts[c];
  return counts;
}

LabelVector LabelVector::subset(std::span<const std::size_t> indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= labels_.size()) throw ValidationError("label index out of range");
    out.push_back(labels_[i]);
  }
  return LabelVector(std::move(out), class_set_);
}

LabelVector read_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> labels;
  std::size_t start = 0;
  std::size_t line_no = 1;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw ValidationError(path.string() + ": blank label on line " + std::to_string(line_no));
    }
    labels.push_back(std::move(line));
    start = end + 1;
    ++line_no;
  }
  return LabelVector(std::move(labels));
}

void write_labels(const std::vector<std::string>& labels, const std::filesystem::path& path) {
  std::string out;
  for (const auto& l : labels) {
    if (l.empty() || l.find('\n') != std::string::npos) {
      throw ValidationError("labels must be non-empty single-line strings");
    }
    out += l;
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace featurescope
