#include "featurescope/probing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "featurescope/error.hpp"
#include "featurescope/rng.hpp"

namespace featurescope {

std::string to_string(ClassWeighting w) {
  return w == ClassWeighting::uniform ? "uniform" : "inverse_frequency";
}

ClassWeighting parse_class_weighting(const std::string& name) {
  if (name == "uniform") return ClassWeighting::uniform;
  if (name == "inverse_frequency") return ClassWeighting::inverse_frequency;
  throw ValidationError("unknown class weighting '" + name + "'");
}

void ProbeConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) throw ValidationError("l2_penalty must be non-negative");
  if (!(convergence_tol >= 0.0)) throw ValidationError("convergence_tol must be non-negative");
}

namespace {

Vector sample_weights(const LabelVector& y, ClassWeighting weighting) {
  const auto counts = y.class_counts();
  const double n = static_cast<double>(y.size());
  const double classes = static_cast<double>(counts.size());
  Vector w(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) =
        weighting == ClassWeighting::uniform ? 1.0 : n / (classes * static_cast<double>(counts[y.class_index(i)]));
  }
  return w / w.sum();
}

// Row-wise softmax of `logits` in place; returns the weighted cross-entropy.
double softmax_loss(Matrix& logits, const LabelVector& y, const Vector& w) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      logits(i, c) = std::exp(logits(i, c) - mx);
      z += logits(i, c);
    }
    logits.row(i) /= z;
    const auto truth = static_cast<Eigen::Index>(y.class_index(static_cast<std::size_t>(i)));
    loss -= w(i) * (std::log(logits(i, truth)));
  }
  return loss;
}

struct Evaluation {
  double objective;
  Matrix probs;
};

Evaluation evaluate(const Matrix& x, const LabelVector& y, const Vector& w, const Matrix& weights,
                    const Vector& bias, double l2) {
  Matrix logits = x * weights.transpose();
  logits.rowwise() += bias.transpose();
  const double ce = softmax_loss(logits, y, w);
  return {ce + 0.5 * l2 * weights.squaredNorm(), std::move(logits)};
}

}  // namespace

double probe_objective(const LinearProbe& probe, const Matrix& features, const LabelVector& y,
                       const ProbeConfig& cfg) {
  const LabelVector yy(y.labels(), probe.class_set);
  return evaluate(features, yy, sample_weights(yy, cfg.class_weighting), probe.weights, probe.bias,
                  cfg.l2_penalty)
      .objective;
}

LinearProbe train_probe(const Matrix& x, const LabelVector& y, const ProbeConfig& cfg, TrainingTrace* trace) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ValidationError("probe: " + std::to_string(x.rows()) + " feature rows but " +
                          std::to_string(y.size()) + " labels");
  }
  const auto counts = y.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw ValidationError("probe: class '" + y.class_set()[c] + "' has no training samples");
  }
  if (!x.allFinite()) throw ValidationError("probe: non-finite feature values");

  const auto classes = static_cast<Eigen::Index>(y.class_count());
  const Vector w = sample_weights(y, cfg.class_weighting);
  Matrix onehot = Matrix::Zero(x.rows(), classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) onehot(i, static_cast<Eigen::Index>(y.class_index(static_cast<std::size_t>(i)))) = 1.0;

  LinearProbe probe{Matrix::Zero(classes, x.cols()), Vector::Zero(classes), y.class_set()};
  Evaluation current = evaluate(x, y, w, probe.weights, probe.bias, cfg.l2_penalty);
  if (!std::isfinite(current.objective)) throw TrainingError("probe: initial loss is not finite");

  TrainingTrace local;
  TrainingTrace& t = trace ? *trace : local;
  t = TrainingTrace{};
  t.loss.push_back(current.objective);

  double lr = cfg.learning_rate;
  constexpr int kMaxHalvings = 60;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix residual = current.probs - onehot;
    residual.array().colwise() *= w.array();
    const Matrix grad_w = residual.transpose() * x + cfg.l2_penalty * probe.weights;
    const Vector grad_b = residual.colwise().sum().transpose();
    if (!grad_w.allFinite() || !grad_b.allFinite()) throw TrainingError("probe: gradient is not finite");

    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      Matrix next_w = probe.weights - lr * grad_w;
      Vector next_b = probe.bias - lr * grad_b;
      Evaluation next = evaluate(x, y, w, next_w, next_b, cfg.l2_penalty);
      if (std::isfinite(next.objective) && next.objective <= current.objective) {
        const double delta = current.objective - next.objective;
        probe.weights = std::move(next_w);
        probe.bias = std::move(next_b);
        current = std::move(next);
        t.loss.push_back(current.objective);
        accepted = true;
        if (delta < cfg.convergence_tol) t.converged = true;
        break;
      }
      ++t.rejected_steps;
      lr *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(current.objective)) throw TrainingError("probe: loss diverged");
      t.converged = true;  // no descent direction left at machine precision
    }
    if (t.converged) break;
  }
  t.final_learning_rate = lr;
  if (!probe.weights.allFinite() || !probe.bias.allFinite()) throw TrainingError("probe: parameters diverged");
  return probe;
}

LinearProbe train_probe(const FeatureMatrix& features, const LabelVector& y, const ProbeConfig& cfg,
                        TrainingTrace* trace) {
  return train_probe(to_dense(features), y, cfg, trace);
}

std::vector<std::size_t> predict(const LinearProbe& probe, const Matrix& x) {
  if (x.cols() != probe.weights.cols()) {
    throw ValidationError("probe expects " + std::to_string(probe.weights.cols()) + " features, got " +
                          std::to_string(x.cols()));
  }
  Matrix logits = x * probe.weights.transpose();
  logits.rowwise() += probe.bias.transpose();
  std::vector<std::size_t> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

Metrics compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        const std::vector<std::string>& class_set) {
  if (truth.size() != predicted.size()) throw ValidationError("metrics: length mismatch");
  if (truth.empty()) throw ValidationError("metrics: no samples");
  const std::size_t c = class_set.size();
  Metrics m;
  m.class_set = class_set;
  m.confusion.assign(c, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= c || predicted[i] >= c) throw ValidationError("metrics: class index out of range");
    ++m.confusion[truth[i]][predicted[i]];
  }
  m.total = truth.size();
  std::size_t correct = 0;
  double f1_sum = 0.0;
  std::size_t f1_count = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.per_class_f1.assign(c, nan);
  m.per_class_accuracy.assign(c, nan);
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t tp = m.confusion[k][k];
    std::size_t support = 0, predicted_k = 0;
    for (std::size_t j = 0; j < c; ++j) {
      support += m.confusion[k][j];
      predicted_k += m.confusion[j][k];
    }
    correct += tp;
    if (support > 0) m.per_class_accuracy[k] = static_cast<double>(tp) / static_cast<double>(support);
    const std::size_t fp = predicted_k - tp;
    const std::size_t fn = support - tp;
    if (support == 0 && predicted_k == 0) {
      m.warnings.push_back("class '" + class_set[k] + "' has no support and was never predicted; excluded from macro-F1");
      continue;
    }
    if (support == 0) {
      m.warnings.push_back("class '" + class_set[k] + "' has no support but was predicted; contributes F1 = 0");
    }
    const double f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    m.per_class_f1[k] = f1;
    f1_sum += f1;
    ++f1_count;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  m.macro_f1 = f1_count ? f1_sum / static_cast<double>(f1_count) : 0.0;
  return m;
}

Metrics eval_probe(const LinearProbe& probe, const Matrix& features, const LabelVector& y) {
  if (static_cast<std::size_t>(features.rows()) != y.size()) throw ValidationError("eval: row/label count mismatch");
  const auto pred = predict(probe, features);
  std::vector<std::size_t> truth(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto it = std::find(probe.class_set.begin(), probe.class_set.end(), y.label(i));
    if (it == probe.class_set.end()) throw ValidationError("eval: label '" + y.label(i) + "' unknown to the probe");
    truth[i] = static_cast<std::size_t>(it - probe.class_set.begin());
  }
  return compute_metrics(truth, pred, probe.class_set);
}

Metrics eval_probe(const LinearProbe& probe, const FeatureMatrix& features, const LabelVector& y) {
  return eval_probe(probe, to_dense(features), y);
}

SplitIndices stratified_split(const LabelVector& y, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw ValidationError("eval_fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> members(y.class_count());
  for (std::size_t i = 0; i < y.size(); ++i) members[y.class_index(i)].push_back(i);
  SplitIndices out;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& group = members[c];
    auto rng = SplitMix64::stream(seed, {fnv1a64("split"), c});
    shuffle(group, rng);
    std::size_t n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(group.size()) * eval_fraction));
    if (group.size() >= 2) n_eval = std::clamp<std::size_t>(n_eval, 1, group.size() - 1);
    else n_eval = 0;
    out.eval.insert(out.eval.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_eval));
    out.train.insert(out.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_eval), group.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.eval.begin(), out.eval.end());
  return out;
}

Metrics random_baseline(std::size_t rows, std::size_t cols, const LabelVector& y, const ProbeConfig& cfg,
                        std::uint64_t seed) {
  if (rows != y.size()) throw ValidationError("baseline: rows must equal label count");
  if (cols < 1) throw ValidationError("baseline: cols must be positive");
  auto rng = SplitMix64::stream(seed, {fnv1a64("baseline-features")});
  Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
  const auto split = stratified_split(y, 0.2, seed);
  auto take = [&](const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
    return out;
  };
  const auto probe = train_probe(take(split.train), y.subset(split.train), cfg);
  return eval_probe(probe, take(split.eval), y.subset(split.eval));
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["macro_f1"] = m.macro_f1;
  j["accuracy"] = m.accuracy;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  nlohmann::ordered_json per_f1 = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < m.class_set.size(); ++c) {
    per_class[m.class_set[c]] = std::isnan(m.per_class_accuracy[c]) ? nlohmann::ordered_json() : nlohmann::ordered_json(m.per_class_accuracy[c]);
    per_f1[m.class_set[c]] = std::isnan(m.per_class_f1[c]) ? nlohmann::ordered_json() : nlohmann::ordered_json(m.per_class_f1[c]);
  }
  j["per_class_accuracy"] = std::move(per_class);
  j["per_class_f1"] = std::move(per_f1);
  j["classes"] = m.class_set;
  j["confusion"] = m.confusion;
  j["total"] = m.total;
  j["warnings"] = m.warnings;
  return j;
}

nlohmann::ordered_json probe_config_to_json(const ProbeConfig& cfg) {
  nlohmann::ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["l2_penalty"] = cfg.l2_penalty;
  j["class_weighting"] = to_string(cfg.class_weighting);
  j["seed"] = cfg.seed;
  j["convergence_tol"] = cfg.convergence_tol;
  return j;
}

}  // namespace featurescope
