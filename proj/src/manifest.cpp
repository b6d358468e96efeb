#include "featurescope/manifest.hpp"

#include <algorithm>
#include <set>

#include "featurescope/error.hpp"
#include "featurescope/fam.hpp"
#include "featurescope/fs_util.hpp"

namespace featurescope {

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("manifest: missing field '") + key + "'");
  return *it;
}

std::string string_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw ValidationError(std::string("manifest: '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string RunManifest::matrix_path(int layer, const std::string& checkpoint,
                                     const std::string& split) const {
  std::string p = matrix_path_template;
  replace_all(p, "{layer}", std::to_string(layer));
  replace_all(p, "{checkpoint}", checkpoint);
  replace_all(p, "{split}", split);
  return p;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("manifest: top level must be an object");
  const auto& version = field(j, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion) {
    throw ValidationError("manifest: unsupported schema_version");
  }
  RunManifest m;
  m.run_id = string_field(j, "run_id");
  m.model_name = string_field(j, "model_name");
  m.task_name = string_field(j, "task_name");
  m.matrix_path_template = string_field(j, "matrix_path_template");

  const auto& layers = field(j, "layers");
  if (!layers.is_array() || layers.empty()) throw ValidationError("manifest: 'layers' must be a non-empty array");
  for (const auto& l : layers) {
    if (!l.is_number_integer()) throw ValidationError("manifest: layer indices must be integers");
    const int v = l.get<int>();
    if (!m.layers.empty() && v <= m.layers.back()) {
      throw ValidationError("manifest: layers must be strictly increasing");
    }
    m.layers.push_back(v);
  }

  const auto& ckpts = field(j, "checkpoints");
  if (!ckpts.is_array() || ckpts.empty()) throw ValidationError("manifest: 'checkpoints' must be a non-empty array");
  std::set<std::string> seen;
  for (const auto& c : ckpts) {
    if (!c.is_string() || c.get<std::string>().empty()) {
      throw ValidationError("manifest: checkpoint tags must be non-empty strings");
    }
    auto tag = c.get<std::string>();
    if (!seen.insert(tag).second) throw ValidationError("manifest: duplicate checkpoint tag '" + tag + "'");
    m.checkpoints.push_back(std::move(tag));
  }

  const auto& splits = field(j, "splits");
  if (!splits.is_array() || splits.empty()) throw ValidationError("manifest: 'splits' must be a non-empty array");
  std::set<std::string> split_names;
  for (const auto& s : splits) {
    if (!s.is_object()) throw ValidationError("manifest: split entries must be objects");
    SplitSpec spec{string_field(s, "name"), string_field(s, "labels")};
    if (spec.name.empty()) throw ValidationError("manifest: split name is empty");
    if (!split_names.insert(spec.name).second) {
      throw ValidationError("manifest: duplicate split '" + spec.name + "'");
    }
    m.splits.push_back(std::move(spec));
  }

  for (const char* ph : {"{layer}", "{checkpoint}", "{split}"}) {
    if (m.matrix_path_template.find(ph) == std::string::npos) {
      throw ValidationError(std::string("manifest: matrix_path_template lacks ") + ph);
    }
  }

  if (auto it = j.find("perplexity"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw ValidationError("manifest: 'perplexity' must be a number or null");
    m.perplexity = it->get<double>();
  }
  return m;
}

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["run_id"] = m.run_id;
  j["model_name"] = m.model_name;
  j["task_name"] = m.task_name;
  j["layers"] = m.layers;
  j["checkpoints"] = m.checkpoints;
  auto splits = nlohmann::ordered_json::array();
  for (const auto& s : m.splits) {
    nlohmann::ordered_json e;
    e["name"] = s.name;
    e["labels"] = s.labels_path;
    splits.push_back(std::move(e));
  }
  j["splits"] = std::move(splits);
  j["matrix_path_template"] = m.matrix_path_template;
  j["perplexity"] = m.perplexity ? nlohmann::ordered_json(*m.perplexity) : nlohmann::ordered_json();
  return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

bool RunHandle::has_split(const std::string& split) const { return labels_.count(split) > 0; }

const LabelVector& RunHandle::labels(const std::string& split) const {
  auto it = labels_.find(split);
  if (it == labels_.end()) throw ValidationError("run '" + manifest_.run_id + "' has no split '" + split + "'");
  return it->second;
}

std::size_t RunHandle::rows(const std::string& split) const { return labels(split).size(); }

std::size_t RunHandle::cols(int layer, const std::string& split) const {
  auto it = cols_.find({layer, split});
  if (it == cols_.end()) throw ValidationError("no cells for layer " + std::to_string(layer) + " in split '" + split + "'");
  return it->second;
}

std::size_t RunHandle::layer_position(int layer) const {
  auto it = std::find(manifest_.layers.begin(), manifest_.layers.end(), layer);
  if (it == manifest_.layers.end()) throw ValidationError("run has no layer " + std::to_string(layer));
  return static_cast<std::size_t>(it - manifest_.layers.begin());
}

std::size_t RunHandle::checkpoint_position(const std::string& checkpoint) const {
  auto it = std::find(manifest_.checkpoints.begin(), manifest_.checkpoints.end(), checkpoint);
  if (it == manifest_.checkpoints.end()) throw ValidationError("run has no checkpoint '" + checkpoint + "'");
  return static_cast<std::size_t>(it - manifest_.checkpoints.begin());
}

void RunHandle::require_cell(int layer, const std::string& checkpoint, const std::string& split) const {
  layer_position(layer);
  checkpoint_position(checkpoint);
  labels(split);
}

std::filesystem::path RunHandle::matrix_file(int layer, const std::string& checkpoint,
                                             const std::string& split) const {
  std::filesystem::path p = manifest_.matrix_path(layer, checkpoint, split);
  return p.is_absolute() ? p : base_dir_ / p;
}

FeatureMatrix RunHandle::matrix(int layer, const std::string& checkpoint, const std::string& split) const {
  require_cell(layer, checkpoint, split);
  return read_matrix(matrix_file(layer, checkpoint, split));
}

RunHandle load_run(const std::filesystem::path& manifest_path) {
  const std::string text = read_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  RunHandle h;
  h.manifest_ = manifest_from_json(j);
  h.base_dir_ = manifest_path.has_parent_path() ? manifest_path.parent_path() : std::filesystem::path(".");

  for (const auto& split : h.manifest_.splits) {
    std::filesystem::path lp = split.labels_path;
    if (!lp.is_absolute()) lp = h.base_dir_ / lp;
    if (!std::filesystem::exists(lp)) throw ValidationError("missing label file " + lp.string());
    LabelVector labels = read_labels(lp);
    const auto counts = labels.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 1) {
        h.warnings_.push_back("split '" + split.name + "': class '" + labels.class_set()[c] +
                              "' has a single sample");
      }
    }

    for (int layer : h.manifest_.layers) {
      std::size_t layer_cols = 0;
      for (const auto& ckpt : h.manifest_.checkpoints) {
        const auto file = h.matrix_file(layer, ckpt, split.name);
        if (!std::filesystem::exists(file)) throw ValidationError("missing matrix file " + file.string());
        FamHeader hdr;
        try {
          hdr = read_matrix_header(file);
        } catch (const FormatError& e) {
          throw ValidationError(e.what());
        }
        if (hdr.rows != labels.size()) {
          throw ValidationError(file.string() + ": " + std::to_string(hdr.rows) + " rows but split '" +
                                split.name + "' has " + std::to_string(labels.size()) + " labels");
        }
        if (layer_cols == 0) {
          layer_cols = hdr.cols;
        } else if (hdr.cols != layer_cols) {
          throw ValidationError(file.string() + ": feature dimension differs across checkpoints of layer " +
                                std::to_string(layer));
        }
      }
      h.cols_[{layer, split.name}] = layer_cols;
    }
    h.labels_.emplace(split.name, std::move(labels));
  }

  std::set<std::size_t> dims;
  for (const auto& [key, c] : h.cols_) dims.insert(c);
  if (dims.size() > 1) h.warnings_.push_back("feature dimension varies across layers");
  return h;
}

}  // namespace featurescope
