#include "featurescope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "featurescope/error.hpp"
#include "featurescope/fam.hpp"
#include "featurescope/format.hpp"
#include "featurescope/fs_util.hpp"
#include "featurescope/labels.hpp"
#include "featurescope/rng.hpp"

namespace featurescope {

namespace {

constexpr double kStretch = 1.6;
constexpr double kOutlierRadii = 5.0;

}  // namespace

std::vector<std::string> SynthConfig::default_checkpoint_tags() {
  std::vector<std::string> tags = {"pretrained"};
  for (int e = 1; e <= 10; ++e) tags.push_back("epoch-" + std::to_string(e));
  for (int e : {15, 20, 25}) tags.push_back("epoch-" + std::to_string(e));
  return tags;
}

void SynthConfig::validate() const {
  if (run_id.empty()) throw ValidationError("synth: run_id is empty");
  if (dim < 3) throw ValidationError("synth: dim must be at least 3");
  if (layers < 1) throw ValidationError("synth: layers must be positive");
  if (checkpoint_tags.empty()) throw ValidationError("synth: no checkpoint tags");
  std::set<std::string> seen(checkpoint_tags.begin(), checkpoint_tags.end());
  if (seen.size() != checkpoint_tags.size()) throw ValidationError("synth: duplicate checkpoint tag");
  if (!seen.count(disambiguation_epoch)) {
    throw ValidationError("synth: disambiguation_epoch '" + disambiguation_epoch + "' is not a checkpoint tag");
  }
  if (class_proportions.size() < 2) throw ValidationError("synth: need at least two classes");
  double sum = 0.0;
  for (double p : class_proportions) {
    if (!(p > 0.0)) throw ValidationError("synth: class proportions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("synth: class proportions must sum to 1");
  if (!class_names.empty()) {
    if (class_names.size() != class_proportions.size()) throw ValidationError("synth: class_names length mismatch");
    std::set<std::string> names(class_names.begin(), class_names.end());
    if (names.size() != class_names.size() || names.count("")) throw ValidationError("synth: bad class names");
  }
  for (const auto& [tag, scales] : separation_schedule) {
    if (!seen.count(tag)) throw ValidationError("synth: separation_schedule tag '" + tag + "' is not a checkpoint");
    if (scales.size() != layers) throw ValidationError("synth: separation_schedule['" + tag + "'] needs one value per layer");
    for (double s : scales) {
      if (!std::isfinite(s) || s < 0.0) throw ValidationError("synth: separation scales must be finite and >= 0");
    }
  }
  if (change_start_layer < 1 || change_start_layer > layers) {
    throw ValidationError("synth: change_start_layer outside [1, layers]");
  }
  if (!(spectrum_top2_share > 0.0 && spectrum_top2_share <= 1.0)) {
    throw ValidationError("synth: spectrum_top2_share must be in (0, 1]");
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) throw ValidationError("synth: noise_scale must be positive");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw ValidationError("synth: separation must be >= 0");
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) throw ValidationError("synth: cluster_spread must be >= 0");
  if (!(checkpoint_drift >= 0.0) || !std::isfinite(checkpoint_drift)) throw ValidationError("synth: checkpoint_drift must be >= 0");
  for (std::size_t n : {n_samples, test_samples}) {
    if (n == 0) continue;
    for (std::size_t c : largest_remainder_counts(n, class_proportions)) {
      if (c < 2) throw ValidationError("synth: every class needs at least 2 samples per split");
    }
  }
  if (n_samples == 0) throw ValidationError("synth: n_samples must be positive");
  if (planted_outliers > n_samples / 2) throw ValidationError("synth: too many planted outliers");
  if (n_samples > 0xFFFFFFFFull || dim > 0xFFFFFFFFull) throw ValidationError("synth: shape exceeds FAM limits");
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config field '") + key + "': " + e.what());
  }
}

}  // namespace

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synth config must be a JSON object");
  static const std::set<std::string> known = {
      "run_id", "model_name", "task_name", "n_samples", "test_samples", "dim", "layers", "checkpoint_tags",
      "class_proportions", "class_names", "separation_schedule", "change_start_layer", "disambiguation_epoch",
      "spectrum_top2_share", "planted_outliers", "noise_scale", "separation", "cluster_spread",
      "checkpoint_drift", "perplexity", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("synth config: unknown field '" + key + "'");
  }
  SynthConfig cfg;
  take(j, "run_id", cfg.run_id);
  take(j, "model_name", cfg.model_name);
  take(j, "task_name", cfg.task_name);
  take(j, "n_samples", cfg.n_samples);
  take(j, "test_samples", cfg.test_samples);
  take(j, "dim", cfg.dim);
  take(j, "layers", cfg.layers);
  take(j, "checkpoint_tags", cfg.checkpoint_tags);
  take(j, "class_proportions", cfg.class_proportions);
  take(j, "class_names", cfg.class_names);
  take(j, "separation_schedule", cfg.separation_schedule);
  take(j, "change_start_layer", cfg.change_start_layer);
  take(j, "disambiguation_epoch", cfg.disambiguation_epoch);
  take(j, "spectrum_top2_share", cfg.spectrum_top2_share);
  take(j, "planted_outliers", cfg.planted_outliers);
  take(j, "noise_scale", cfg.noise_scale);
  take(j, "separation", cfg.separation);
  take(j, "cluster_spread", cfg.cluster_spread);
  take(j, "checkpoint_drift", cfg.checkpoint_drift);
  take(j, "seed", cfg.seed);
  if (j.contains("perplexity") && !j.at("perplexity").is_null()) {
    double p = 0.0;
    take(j, "perplexity", p);
    cfg.perplexity = p;
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::ordered_json j;
  j["run_id"] = cfg.run_id;
  j["model_name"] = cfg.model_name;
  j["task_name"] = cfg.task_name;
  j["n_samples"] = cfg.n_samples;
  j["test_samples"] = cfg.test_samples;
  j["dim"] = cfg.dim;
  j["layers"] = cfg.layers;
  j["checkpoint_tags"] = cfg.checkpoint_tags;
  j["class_proportions"] = cfg.class_proportions;
  j["class_names"] = cfg.class_names;
  nlohmann::ordered_json sched = nlohmann::ordered_json::object();
  for (const auto& [tag, scales] : cfg.separation_schedule) sched[tag] = scales;
  j["separation_schedule"] = std::move(sched);
  j["change_start_layer"] = cfg.change_start_layer;
  j["disambiguation_epoch"] = cfg.disambiguation_epoch;
  j["spectrum_top2_share"] = cfg.spectrum_top2_share;
  j["planted_outliers"] = cfg.planted_outliers;
  j["noise_scale"] = cfg.noise_scale;
  j["separation"] = cfg.separation;
  j["cluster_spread"] = cfg.cluster_spread;
  j["checkpoint_drift"] = cfg.checkpoint_drift;
  j["perplexity"] = cfg.perplexity ? nlohmann::ordered_json(*cfg.perplexity) : nlohmann::ordered_json();
  j["seed"] = cfg.seed;
  return j;
}

SynthConfig read_synth_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("synth config " + path.string() + ": " + e.what());
  }
  return synth_config_from_json(j);
}

std::vector<std::size_t> largest_remainder_counts(std::size_t n, const std::vector<double>& proportions) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> frac(proportions.size());
  std::size_t used = 0;
  for (std::size_t c = 0; c < proportions.size(); ++c) {
    const double exact = static_cast<double>(n) * proportions[c];
    counts[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[c] = exact - static_cast<double>(counts[c]);
    used += counts[c];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; used < n; i = (i + 1) % order.size()) {
    ++counts[order[i]];
    ++used;
  }
  // Rounding guard can only overshoot by construction errors in the proportions.
  while (used > n) {
    const auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --used;
  }
  return counts;
}

namespace {

// Smallest gap between distinct sorted coordinates.
double min_gap(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) g = std::min(g, v[i] - v[i - 1]);
  return g;
}

}  // namespace

Matrix class_mean_template(const std::vector<double>& p) {
  const auto c_count = static_cast<Eigen::Index>(p.size());
  Matrix m = Matrix::Zero(c_count, 2);
  if (c_count == 2) {
    m(0, 0) = -std::sqrt(p[1] / p[0]) * kStretch;
    m(1, 0) = std::sqrt(p[0] / p[1]) * kStretch;
    return m;
  }
  for (Eigen::Index c = 0; c < c_count; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(c_count);
    m(c, 0) = std::cos(angle);
    m(c, 1) = std::sin(angle);
  }
  Eigen::RowVector2d mean = Eigen::RowVector2d::Zero();
  for (Eigen::Index c = 0; c < c_count; ++c) mean += p[static_cast<std::size_t>(c)] * m.row(c);
  m.rowwise() -= mean;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (Eigen::Index c = 0; c < c_count; ++c) {
    cov += p[static_cast<std::size_t>(c)] * m.row(c).transpose() * m.row(c);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Matrix2d whiten =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  m = m * whiten;  // whiten is symmetric

  double best_score = -1.0;
  Matrix best = m;
  for (int k = 0; k < 360; ++k) {
    const double theta = std::numbers::pi * k / 360.0;
    Eigen::Matrix2d rot;
    rot << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    const Matrix r = m * rot;
    std::vector<double> xs(r.col(0).data(), r.col(0).data() + c_count);
    std::vector<double> ys(r.col(1).data(), r.col(1).data() + c_count);
    const double score = std::min(min_gap(xs), min_gap(ys));
    if (score > best_score + 1e-12) {
      best_score = score;
      best = r;
    }
  }
  best.col(0) *= kStretch;
  return best;
}

namespace {

std::size_t disambiguation_index(const SynthConfig& cfg) {
  return static_cast<std::size_t>(
      std::find(cfg.checkpoint_tags.begin(), cfg.checkpoint_tags.end(), cfg.disambiguation_epoch) -
      cfg.checkpoint_tags.begin());
}

// 0 before the disambiguation checkpoint, 0.6 at it, rising linearly to 1 at
// the last checkpoint.
double checkpoint_ramp(const SynthConfig& cfg, std::size_t checkpoint_pos) {
  const std::size_t didx = disambiguation_index(cfg);
  if (checkpoint_pos < didx) return 0.0;
  const std::size_t last = cfg.checkpoint_tags.size() - 1;
  if (last == didx) return 1.0;
  return std::min(1.0, 0.6 + 0.4 * static_cast<double>(checkpoint_pos - didx) / static_cast<double>(last - didx));
}

}  // namespace

double separation_scale(const SynthConfig& cfg, std::size_t layer, std::size_t checkpoint_pos) {
  const auto& tag = cfg.checkpoint_tags.at(checkpoint_pos);
  if (const auto it = cfg.separation_schedule.find(tag); it != cfg.separation_schedule.end()) {
    return it->second.at(layer - 1);
  }
  if (layer < cfg.change_start_layer) return 0.0;
  const double depth = 0.75 + 0.25 * static_cast<double>(layer - cfg.change_start_layer) /
                                  static_cast<double>(std::max<std::size_t>(1, cfg.layers - cfg.change_start_layer));
  return depth * checkpoint_ramp(cfg, checkpoint_pos);
}

namespace {

struct SplitData {
  std::string name;
  std::vector<std::size_t> codes;
  std::vector<std::string> labels;
};

SplitData make_split(const SynthConfig& cfg, const std::vector<std::string>& names, const std::string& split,
                     std::size_t n, std::uint64_t split_tag) {
  SplitData s;
  s.name = split;
  const auto counts = largest_remainder_counts(n, cfg.class_proportions);
  for (std::size_t c = 0; c < counts.size(); ++c) s.codes.insert(s.codes.end(), counts[c], c);
  SplitMix64 rng = SplitMix64::stream(cfg.seed, {fnv1a64("labels"), split_tag});
  shuffle(s.codes, rng);
  for (std::size_t c : s.codes) s.labels.push_back(names[c]);
  return s;
}

Matrix gaussian(std::size_t rows, std::size_t cols, double scale, SplitMix64 rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Row-major draw order so the stream layout matches the FAM layout.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

Matrix plane_basis(const SynthConfig& cfg, std::size_t layer) {
  Matrix q = gaussian(cfg.dim, 2, 1.0, SplitMix64::stream(cfg.seed, {fnv1a64("plane"), layer}));
  q.col(0).normalize();
  q.col(1) -= q.col(0).dot(q.col(1)) * q.col(0);
  q.col(1).normalize();
  return q;
}

// Template-space positions for planted outliers. A site takes the x of the
// class extreme on one side of PC1 and the y of a different class extreme on
// one side of PC2, pushed outward by the required clearance. In 1-D it joins
// those two extreme clusters, so it lands in a product rectangle that holds
// no class and is never among the selected boxes.
std::vector<std::pair<double, double>> outlier_sites(const SynthConfig& cfg, const Matrix& tmpl, double sep_min,
                                                     std::size_t count) {
  const double radius = 3.0 * cfg.cluster_spread;
  const double need = kOutlierRadii * radius;
  std::vector<std::pair<double, double>> sites;
  if (sep_min > 0.0) {
    const double push = need / sep_min;
    std::vector<std::pair<double, double>> corners;
    for (const double sx : {1.0, -1.0}) {
      for (const double sy : {1.0, -1.0}) {
        Eigen::Index a = 0, b = 0;
        for (Eigen::Index c = 1; c < tmpl.rows(); ++c) {
          if (sx * tmpl(c, 0) > sx * tmpl(a, 0)) a = c;
          if (sy * tmpl(c, 1) > sy * tmpl(b, 1)) b = c;
        }
        if (a == b) continue;
        corners.emplace_back(tmpl(a, 0) + sx * push, tmpl(b, 1) + sy * push);
      }
    }
    std::stable_sort(corners.begin(), corners.end(), [](const auto& p, const auto& q) {
      return std::hypot(p.first, p.second) < std::hypot(q.first, q.second);
    });
    for (std::size_t k = 0; k < count && !corners.empty(); ++k) sites.push_back(corners[k % corners.size()]);
  }
  if (sites.size() < count) {
    // Radial fallback, evenly spaced angles beyond the outermost class mean.
    double reach = 0.0;
    for (Eigen::Index c = 0; c < tmpl.rows(); ++c) reach = std::max(reach, tmpl.row(c).norm());
    const double r = sep_min > 0.0 ? reach + need / sep_min : reach;
    for (std::size_t k = sites.size(); k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.25) / static_cast<double>(count);
      sites.emplace_back(r * std::cos(a), r * std::sin(a));
    }
  }
  return sites;
}

struct LayerState {
  Matrix within;  // n × 2, unit-variance jitter
  Matrix noise;   // n × d base noise
};

struct Cell {
  Matrix plane;  // n × 2 plane coordinates T
  Matrix noise;  // n × d, orthogonal to the plane and to centered T
};

Cell make_cell(const SynthConfig& cfg, const LayerState& st, const Matrix& q, const Matrix& tmpl,
               const SplitData& split, std::uint64_t split_tag, std::size_t layer, std::size_t ckpt,
               const std::vector<PlantedOutlier>* outliers) {
  const double sep = cfg.separation * separation_scale(cfg, layer, ckpt);
  const auto n = static_cast<Eigen::Index>(split.codes.size());
  Cell cell;
  cell.plane.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    cell.plane.row(i) = sep * tmpl.row(static_cast<Eigen::Index>(split.codes[static_cast<std::size_t>(i)])) +
                        cfg.cluster_spread * st.within.row(i);
  }
  if (outliers) {
    for (const auto& o : *outliers) {
      const auto i = static_cast<Eigen::Index>(o.sample_index);
      cell.plane(i, 0) = sep * o.plane_x + cfg.cluster_spread * st.within(i, 0);
      cell.plane(i, 1) = sep * o.plane_y + cfg.cluster_spread * st.within(i, 1);
    }
  }
  cell.noise = st.noise;
  if (ckpt > 0 && cfg.checkpoint_drift > 0.0) {
    cell.noise += gaussian(split.codes.size(), cfg.dim, cfg.checkpoint_drift * cfg.noise_scale,
                           SplitMix64::stream(cfg.seed, {fnv1a64("drift"), layer, ckpt, split_tag}));
  }
  cell.noise -= (cell.noise * q) * q.transpose();
  // Remove sample-space correlation with the plane coordinates so the
  // off-plane dimensions carry no class signal.
  const Matrix tc = cell.plane.rowwise() - cell.plane.colwise().mean();
  const Eigen::Matrix2d gram = tc.transpose() * tc;
  if (std::abs(gram.determinant()) > 1e-12 * std::max(1.0, gram.squaredNorm())) {
    cell.noise -= tc * gram.ldlt().solve(tc.transpose() * cell.noise);
  }
  return cell;
}

double total_variance(const Matrix& m) {
  const Matrix c = m.rowwise() - m.colwise().mean();
  return c.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, m.rows() - 1));
}

std::string cell_path(int layer, const std::string& tag, const std::string& split) {
  return "features/L" + std::to_string(layer) + "_" + tag + "_" + split + ".fam";
}

}  // namespace

RunManifest generate_run(const SynthConfig& cfg, const std::filesystem::path& out_dir, SynthTruth* truth_out) {
  cfg.validate();
  std::vector<std::string> names = cfg.class_names;
  if (names.empty()) {
    for (std::size_t c = 0; c < cfg.class_proportions.size(); ++c) names.push_back("class-" + std::to_string(c));
  }
  const Matrix tmpl = class_mean_template(cfg.class_proportions);

  std::vector<SplitData> splits;
  splits.push_back(make_split(cfg, names, "train", cfg.n_samples, 0));
  if (cfg.test_samples > 0) splits.push_back(make_split(cfg, names, "test", cfg.test_samples, 1));

  const std::size_t didx = disambiguation_index(cfg);
  const std::size_t last = cfg.checkpoint_tags.size() - 1;

  SynthTruth truth;
  truth.class_means = tmpl;
  truth.label_counts = largest_remainder_counts(cfg.n_samples, cfg.class_proportions);
  if (cfg.planted_outliers > 0) {
    std::vector<std::size_t> idx(cfg.n_samples);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng = SplitMix64::stream(cfg.seed, {fnv1a64("outliers")});
    for (std::size_t i = 0; i < cfg.planted_outliers; ++i) std::swap(idx[i], idx[i + rng.bounded(idx.size() - i)]);
    double sep_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = didx; t <= last; ++t) {
      sep_min = std::min(sep_min, cfg.separation * separation_scale(cfg, cfg.layers, t));
    }
    const auto sites = outlier_sites(cfg, tmpl, sep_min, cfg.planted_outliers);
    for (std::size_t i = 0; i < cfg.planted_outliers; ++i) truth.outliers.push_back({idx[i], sites[i].first, sites[i].second});
    std::sort(truth.outliers.begin(), truth.outliers.end(),
              [](const auto& a, const auto& b) { return a.sample_index < b.sample_index; });
  }

  RunManifest manifest;
  manifest.run_id = cfg.run_id;
  manifest.model_name = cfg.model_name;
  manifest.task_name = cfg.task_name;
  for (std::size_t l = 1; l <= cfg.layers; ++l) manifest.layers.push_back(static_cast<int>(l));
  manifest.checkpoints = cfg.checkpoint_tags;
  for (const auto& s : splits) manifest.splits.push_back({s.name, "labels/" + s.name + ".txt"});
  manifest.matrix_path_template = "features/L{layer}_{checkpoint}_{split}.fam";
  manifest.perplexity = cfg.perplexity;

  for (const auto& s : splits) write_labels(s.labels, out_dir / ("labels/" + s.name + ".txt"));

  for (std::size_t layer = 1; layer <= cfg.layers; ++layer) {
    const Matrix q = plane_basis(cfg, layer);
    std::vector<LayerState> states;
    for (std::size_t si = 0; si < splits.size(); ++si) {
      const std::size_t n = splits[si].codes.size();
      states.push_back({gaussian(n, 2, 1.0, SplitMix64::stream(cfg.seed, {fnv1a64("within"), layer, si})),
                        gaussian(n, cfg.dim, cfg.noise_scale, SplitMix64::stream(cfg.seed, {fnv1a64("noise"), layer, si}))});
    }
    auto planted = [&](std::size_t si, std::size_t t) -> const std::vector<PlantedOutlier>* {
      return si == 0 && layer == cfg.layers && t >= didx && !truth.outliers.empty() ? &truth.outliers : nullptr;
    };
    // Off-plane amplitude reached at the final checkpoint, chosen so the plane
    // holds spectrum_top2_share of the total variance there.
    double final_amp = 1.0;
    if (layer >= cfg.change_start_layer) {
      const Cell fin = make_cell(cfg, states[0], q, tmpl, splits[0], 0, layer, last, planted(0, last));
      const double v2 = total_variance(fin.plane);
      const double vn = total_variance(fin.noise);
      const double s = cfg.spectrum_top2_share;
      if (vn > 0.0) final_amp = std::min(1.0, std::sqrt(v2 * (1.0 - s) / (s * vn)));
    }
    truth.noise_amplitude.push_back(final_amp);

    for (std::size_t t = 0; t <= last; ++t) {
      const double ramp = layer >= cfg.change_start_layer ? checkpoint_ramp(cfg, t) : 0.0;
      const double amp = 1.0 - ramp * (1.0 - final_amp);
      for (std::size_t si = 0; si < splits.size(); ++si) {
        const Cell cell = make_cell(cfg, states[si], q, tmpl, splits[si], si, layer, t, planted(si, t));
        const Matrix x = amp * cell.noise + cell.plane * q.transpose();
        write_matrix(to_feature_matrix(x), out_dir / cell_path(static_cast<int>(layer), cfg.checkpoint_tags[t], splits[si].name));
      }
    }
  }

  write_manifest(manifest, out_dir / "manifest.json");
  write_file_atomic(out_dir / "synth_truth.json", dump_report(synth_truth_to_json(cfg, truth)));
  if (truth_out) *truth_out = std::move(truth);
  return manifest;
}

nlohmann::ordered_json synth_truth_to_json(const SynthConfig& cfg, const SynthTruth& t) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  j["config"] = synth_config_to_json(cfg);
  j["label_counts"] = t.label_counts;
  auto means = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < t.class_means.rows(); ++c) means.push_back({t.class_means(c, 0), t.class_means(c, 1)});
  j["class_mean_template"] = std::move(means);
  nlohmann::ordered_json out;
  out["split"] = "train";
  out["layer"] = cfg.layers;
  out["from_checkpoint"] = cfg.disambiguation_epoch;
  std::vector<std::size_t> idx;
  auto sites = nlohmann::ordered_json::array();
  for (const auto& o : t.outliers) {
    idx.push_back(o.sample_index);
    sites.push_back({o.plane_x, o.plane_y});
  }
  out["sample_indices"] = idx;
  out["template_positions"] = std::move(sites);
  j["planted_outliers"] = std::move(out);
  j["noise_amplitude"] = t.noise_amplitude;
  return j;
}

}  // namespace featurescope
