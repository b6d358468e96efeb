#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/feature_matrix.hpp"
#include "featurescope/labels.hpp"

namespace featurescope {

inline constexpr int kManifestSchemaVersion = 1;

struct SplitSpec {
  std::string name;
  std::string labels_path;  // relative to the manifest directory unless absolute
};

/// Declarative index of one model run: which (layer, checkpoint, split) cells
/// exist and where their FAM files live.
struct RunManifest {
  std::string run_id;
  std::string model_name;
  std::string task_name;
  std::vector<int> layers;
  std::vector<std::string> checkpoints;
  std::vector<SplitSpec> splits;
  std::string matrix_path_template;  // {layer}, {checkpoint}, {split}
  std::optional<double> perplexity;

  /// Template expansion, relative as written in the manifest.
  std::string matrix_path(int layer, const std::string& checkpoint, const std::string& split) const;
};

/// Structural validation only (no file access).
RunManifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

/// A validated run. Immutable after load_run, so it can be shared across
/// worker threads; matrices are read from disk on each call.
class RunHandle {
 public:
  const RunManifest& manifest() const { return manifest_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool has_split(const std::string& split) const;
  const LabelVector& labels(const std::string& split) const;
  std::size_t rows(const std::string& split) const;
  /// Feature dimension of a cell, from its header.
  std::size_t cols(int layer, const std::string& split) const;
  std::size_t cell_count() const { return manifest_.layers.size() * manifest_.checkpoints.size(); }

  std::filesystem::path matrix_file(int layer, const std::string& checkpoint,
                                    const std::string& split) const;
  FeatureMatrix matrix(int layer, const std::string& checkpoint, const std::string& split) const;

  /// Checks membership; throws ValidationError otherwise.
  void require_cell(int layer, const std::string& checkpoint, const std::string& split) const;

  std::size_t layer_position(int layer) const;
  std::size_t checkpoint_position(const std::string& checkpoint) const;

 private:
  friend RunHandle load_run(const std::filesystem::path& manifest_path);

  RunManifest manifest_;
  std::filesystem::path base_dir_;
  std::map<std::string, LabelVector> labels_;
  std::map<std::pair<int, std::string>, std::size_t> cols_;
  std::vector<std::string> warnings_;
};

/// Parses the manifest, loads every label file and checks every FAM header
/// eagerly: row counts against labels, readable files, consistent shapes.
/// Missing or inconsistent files raise ValidationError; an unreadable
/// manifest raises IoError.
RunHandle load_run(const std::filesystem::path& manifest_path);

}  // namespace featurescope
