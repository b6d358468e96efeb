#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/manifest.hpp"
#include "featurescope/numerics.hpp"

namespace featurescope {

/// Parameters of a synthetic run. Layers are numbered 1..layers. Class means
/// live in a random 2-D plane per layer; from disambiguation_epoch onward they
/// separate in layers >= change_start_layer while isotropic noise fills the
/// remaining dimensions.
struct SynthConfig {
  std::string run_id = "synth";
  std::string model_name = "synth-model";
  std::string task_name = "synth-task";
  std::size_t n_samples = 1000;
  std::size_t test_samples = 0;  // > 0 adds a "test" split
  std::size_t dim = 768;
  std::size_t layers = 12;
  std::vector<std::string> checkpoint_tags = default_checkpoint_tags();
  std::vector<double> class_proportions = {0.67, 0.30, 0.03};
  std::vector<std::string> class_names;  // default class-0, class-1, ...
  // Optional per-checkpoint, per-layer separation scale in [0, 1+]; replaces the
  // built-in ramp for the listed tags.
  std::map<std::string, std::vector<double>> separation_schedule;
  std::size_t change_start_layer = 7;
  std::string disambiguation_epoch = "epoch-6";
  double spectrum_top2_share = 0.95;
  std::size_t planted_outliers = 0;
  double noise_scale = 1.0;
  double separation = 4.0;
  double cluster_spread = 0.25;
  double checkpoint_drift = 0.05;
  std::optional<double> perplexity;
  std::uint64_t seed = 0;

  static std::vector<std::string> default_checkpoint_tags();
  void validate() const;
};

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg);
SynthConfig read_synth_config(const std::filesystem::path& path);

/// Largest-remainder allocation of n over the proportions; ties go to the
/// lower class index.
std::vector<std::size_t> largest_remainder_counts(std::size_t n, const std::vector<double>& proportions);

/// C × 2 class-mean template with weighted mean zero and weighted covariance
/// diag(2.56, 1). For C >= 3 the regular C-gon is whitened and rotated so the
/// classes are as far apart as possible along each axis separately.
Matrix class_mean_template(const std::vector<double>& proportions);

/// Scale applied to the class template at (layer, checkpoint position),
/// before multiplication by cfg.separation.
double separation_scale(const SynthConfig& cfg, std::size_t layer, std::size_t checkpoint_pos);

struct PlantedOutlier {
  std::size_t sample_index = 0;
  double plane_x = 0.0;  // template position before the separation scale
  double plane_y = 0.0;
};

struct SynthTruth {
  std::vector<std::size_t> label_counts;
  std::vector<PlantedOutlier> outliers;   // train split, sorted by sample_index
  std::vector<double> noise_amplitude;    // final-checkpoint amplitude per layer
  Matrix class_means;                     // template, C × 2
};

/// Writes manifest.json, labels/<split>.txt, features/*.fam and
/// synth_truth.json under out_dir. Deterministic in cfg (including seed).
RunManifest generate_run(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                         SynthTruth* truth = nullptr);

nlohmann::ordered_json synth_truth_to_json(const SynthConfig& cfg, const SynthTruth& t);

}  // namespace featurescope
