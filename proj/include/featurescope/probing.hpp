#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "featurescope/feature_matrix.hpp"
#include "featurescope/labels.hpp"
#include "featurescope/numerics.hpp"

namespace featurescope {

enum class ClassWeighting { uniform, inverse_frequency };

std::string to_string(ClassWeighting w);
ClassWeighting parse_class_weighting(const std::string& name);

struct ProbeConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2_penalty = 1e-4;
  ClassWeighting class_weighting = ClassWeighting::inverse_frequency;
  std::uint64_t seed = 0;  // parameters start at zero; reserved for stochastic variants
  double convergence_tol = 1e-7;

  void validate() const;
};

/// Linear softmax classifier on frozen features: logits = W·x + b.
struct LinearProbe {
  Matrix weights;  // C × d
  Vector bias;     // C
  std::vector<std::string> class_set;
};

struct TrainingTrace {
  std::vector<double> loss;  // objective after initialisation and after every accepted step
  std::size_t rejected_steps = 0;
  double final_learning_rate = 0.0;
  bool converged = false;
};

/// Full-batch gradient descent on class-weighted softmax cross-entropy with an
/// L2 penalty on W. A step that would raise the objective is rejected and the
/// step size halved, so the objective is monotone over accepted steps.
LinearProbe train_probe(const Matrix& features, const LabelVector& y, const ProbeConfig& cfg,
                        TrainingTrace* trace = nullptr);
LinearProbe train_probe(const FeatureMatrix& features, const LabelVector& y, const ProbeConfig& cfg,
                        TrainingTrace* trace = nullptr);

/// Weighted objective at the given parameters (the quantity training minimises).
double probe_objective(const LinearProbe& probe, const Matrix& features, const LabelVector& y,
                       const ProbeConfig& cfg);

/// Argmax class indices into probe.class_set; ties go to the lowest index.
std::vector<std::size_t> predict(const LinearProbe& probe, const Matrix& features);

struct Metrics {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::string> class_set;
  std::vector<double> per_class_f1;        // NaN for classes excluded from the macro average
  std::vector<double> per_class_accuracy;  // recall; NaN when the class has no support
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
  std::vector<std::string> warnings;
};

/// Macro-F1 averages per-class F1 = 2TP / (2TP + FP + FN) over classes that
/// have support or were predicted; a class with neither is excluded and a
/// warning recorded.
Metrics compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        const std::vector<std::string>& class_set);

Metrics eval_probe(const LinearProbe& probe, const Matrix& features, const LabelVector& y);
Metrics eval_probe(const LinearProbe& probe, const FeatureMatrix& features, const LabelVector& y);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

/// Per class, shuffle members with stream(seed, {"split", class}) and send
/// round(n_c * eval_fraction) to eval, clamped so classes with >= 2 members
/// keep at least one on each side; singletons stay in train.
SplitIndices stratified_split(const LabelVector& y, double eval_fraction, std::uint64_t seed);

/// i.i.d. N(0,1) features (rows × cols) drawn from `seed`, stratified 80/20
/// split, probe trained on the 80 and evaluated on the 20.
Metrics random_baseline(std::size_t rows, std::size_t cols, const LabelVector& y, const ProbeConfig& cfg,
                        std::uint64_t seed);

nlohmann::ordered_json metrics_to_json(const Metrics& m);
nlohmann::ordered_json probe_config_to_json(const ProbeConfig& cfg);

}  // namespace featurescope
