#include "featurescope/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "featurescope/dynamics.hpp"
#include "featurescope/error.hpp"
#include "featurescope/format.hpp"
#include "featurescope/fs_util.hpp"
#include "featurescope/manifest.hpp"
#include "featurescope/outliers.hpp"
#include "featurescope/plots.hpp"
#include "featurescope/probing.hpp"
#include "featurescope/rng.hpp"
#include "featurescope/rsa.hpp"
#include "featurescope/sparsity.hpp"
#include "featurescope/stimuli.hpp"
#include "featurescope/synth.hpp"

namespace featurescope {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Options {
  // global
  std::vector<std::string> manifests;
  std::string split = "train";
  std::uint64_t seed = 0;
  std::string metric = "euclidean";
  std::string out = ".";
  std::vector<std::string> formats;
  // cell selection
  std::vector<int> layers;
  std::string checkpoint;
  // probe
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2 = 1e-4;
  std::string weighting = "inverse_frequency";
  double tol = 1e-7;
  std::string eval_split;
  // synth
  std::string config;
  // baseline
  std::string labels_file;
  std::size_t cols = 0;
  // rsa
  std::string checkpoint_a;
  std::string checkpoint_b;
  std::string manifest_b;
  std::size_t stimuli = 1000;
  // dynamics
  double threshold = 0.4;
  std::string basis = "per_cell";
  // pcprobe
  std::vector<std::size_t> ks;
  // outliers
  std::size_t m1 = 0, m2 = 0, n_final = 0;
  double margin = 0.0;
  std::string annotations;
};

class Context {
 public:
  Context(const Options& o, std::vector<std::string> args, std::ostream& out, std::ostream& err)
      : opt(o), out(out), err(err), args_(std::move(args)) {}

  const Options& opt;
  std::ostream& out;
  std::ostream& err;

  bool wants(const std::string& format) const {
    return opt.formats.empty() || std::find(opt.formats.begin(), opt.formats.end(), format) != opt.formats.end();
  }

  // The command line minus the output directory, so identical analyses
  // written to different places produce identical bytes.
  std::vector<std::string> reproducible_args() const {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args_.size(); ++i) {
      if (args_[i] == "--out") {
        ++i;
        continue;
      }
      if (args_[i].rfind("--out=", 0) == 0) continue;
      kept.push_back(args_[i]);
    }
    return kept;
  }

  ojson provenance() const {
    const auto kept = reproducible_args();
    std::string joined;
    for (const auto& a : kept) {
      joined += a;
      joined += '\n';
    }
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
    ojson p;
    p["tool"] = kToolVersion;
    p["arguments"] = kept;
    p["config_hash"] = hash;
    p["seed"] = opt.seed;
    return p;
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(opt.out) / name;
    write_file_atomic(path, content);
    out << "wrote " << path.string() << "\n";
  }

  void json(const std::string& name, ojson j) {
    if (!wants("json")) return;
    j["provenance"] = provenance();
    write(name, dump_report(j));
  }
  void csv(const std::string& name, const std::string& text) {
    if (wants("csv")) write(name, text);
  }
  void svg(const std::string& name, const std::string& text) {
    if (wants("svg")) write(name, text);
  }

  void warn(const std::string& message) { err << "warning: " << message << "\n"; }

 private:
  std::vector<std::string> args_;
};

const std::string& require_manifest(const Context& ctx, std::size_t max = 1) {
  if (ctx.opt.manifests.empty()) throw ValidationError("--manifest is required");
  if (ctx.opt.manifests.size() > max) throw ValidationError("too many --manifest values");
  return ctx.opt.manifests.front();
}

RunHandle open_run(Context& ctx, const std::string& path) {
  RunHandle run = load_run(path);
  for (const auto& w : run.warnings()) ctx.warn(run.manifest().run_id + ": " + w);
  return run;
}

void require_split(const RunHandle& run, const std::string& split) {
  if (!run.has_split(split)) throw ValidationError("run '" + run.manifest().run_id + "' has no split '" + split + "'");
}

int pick_layer(const Context& ctx, const RunHandle& run) {
  if (ctx.opt.layers.size() > 1) throw ValidationError("this command takes a single --layer");
  const int layer = ctx.opt.layers.empty() ? run.manifest().layers.back() : ctx.opt.layers.front();
  run.layer_position(layer);
  return layer;
}

std::string pick_checkpoint(const Context& ctx, const RunHandle& run) {
  const std::string c = ctx.opt.checkpoint.empty() ? run.manifest().checkpoints.back() : ctx.opt.checkpoint;
  run.checkpoint_position(c);
  return c;
}

ProbeConfig probe_config(const Context& ctx) {
  ProbeConfig cfg;
  cfg.learning_rate = ctx.opt.learning_rate;
  cfg.epochs = ctx.opt.epochs;
  cfg.l2_penalty = ctx.opt.l2;
  cfg.class_weighting = parse_class_weighting(ctx.opt.weighting);
  cfg.seed = ctx.opt.seed;
  cfg.convergence_tol = ctx.opt.tol;
  cfg.validate();
  return cfg;
}

OutlierOptions outlier_options(const Context& ctx) {
  OutlierOptions o;
  if (ctx.opt.m1) o.m1 = ctx.opt.m1;
  if (ctx.opt.m2) o.m2 = ctx.opt.m2;
  if (ctx.opt.n_final) o.n_final = ctx.opt.n_final;
  o.margin = ctx.opt.margin;
  o.seed = ctx.opt.seed;
  return o;
}

DynamicsOptions dynamics_options(const Context& ctx) {
  DynamicsOptions o;
  o.threshold = ctx.opt.threshold;
  if (ctx.opt.basis == "per_cell") {
    o.basis = BasisMode::per_cell;
  } else if (ctx.opt.basis == "shared_final") {
    o.basis = BasisMode::shared_final;
  } else {
    throw ValidationError("unknown --basis '" + ctx.opt.basis + "'");
  }
  return o;
}

// Evaluation on a separate split when requested, else a stratified 80/20
// split of --split seeded by --seed.
Metrics probe_cell(const RunHandle& run, int layer, const std::string& checkpoint, const std::string& split,
                   const std::string& eval_split, const ProbeConfig& cfg) {
  const FeatureMatrix f = run.matrix(layer, checkpoint, split);
  const LabelVector& y = run.labels(split);
  if (!eval_split.empty()) {
    const LinearProbe p = train_probe(f, y, cfg);
    const LabelVector& ye = run.labels(eval_split);
    const LabelVector y_eval(ye.labels(), y.class_set());
    return eval_probe(p, run.matrix(layer, checkpoint, eval_split), y_eval);
  }
  const SplitIndices s = stratified_split(y, 0.2, cfg.seed);
  const LinearProbe p = train_probe(f.select_rows(s.train), y.subset(s.train), cfg);
  return eval_probe(p, f.select_rows(s.eval), y.subset(s.eval));
}

// ---------------------------------------------------------------------------

int cmd_synth(Context& ctx, bool seed_given, bool out_given) {
  if (!out_given) throw ValidationError("synth needs --out DIR");
  SynthConfig cfg = ctx.opt.config.empty() ? SynthConfig{} : read_synth_config(ctx.opt.config);
  if (seed_given) cfg.seed = ctx.opt.seed;
  cfg.validate();
  const RunManifest m = generate_run(cfg, ctx.opt.out);
  ctx.out << "synth run '" << m.run_id << "': " << m.layers.size() << " layers x " << m.checkpoints.size()
          << " checkpoints x " << m.splits.size() << " split(s) in " << ctx.opt.out << "\n";
  return 0;
}

int cmd_validate(Context& ctx) {
  if (ctx.opt.manifests.empty()) throw ValidationError("--manifest is required");
  ojson runs = ojson::array();
  for (const auto& path : ctx.opt.manifests) {
    const RunHandle run = open_run(ctx, path);
    const auto& m = run.manifest();
    ojson r;
    r["run_id"] = m.run_id;
    r["model_name"] = m.model_name;
    r["task_name"] = m.task_name;
    r["layers"] = m.layers;
    r["checkpoints"] = m.checkpoints;
    ojson splits = ojson::array();
    for (const auto& s : m.splits) {
      ojson e;
      e["name"] = s.name;
      e["rows"] = run.rows(s.name);
      e["classes"] = run.labels(s.name).class_set();
      e["class_counts"] = run.labels(s.name).class_counts();
      e["cells"] = run.cell_count();
      splits.push_back(std::move(e));
    }
    r["splits"] = std::move(splits);
    r["warnings"] = run.warnings();
    runs.push_back(std::move(r));
    ctx.out << m.run_id << ": ok, " << run.cell_count() << " cells per split, " << run.warnings().size()
            << " warning(s)\n";
  }
  ojson j;
  j["schema_version"] = 1;
  j["runs"] = std::move(runs);
  ctx.json("validation.json", std::move(j));
  return 0;
}

int cmd_probe(Context& ctx) {
  const RunHandle run = open_run(ctx, require_manifest(ctx));
  require_split(run, ctx.opt.split);
  if (!ctx.opt.eval_split.empty()) require_split(run, ctx.opt.eval_split);
  const ProbeConfig cfg = probe_config(ctx);
  const std::string ckpt = pick_checkpoint(ctx, run);
  std::vector<int> layers = ctx.opt.layers;
  if (layers.empty()) layers.push_back(run.manifest().layers.back());
  for (int l : layers) run.layer_position(l);

  std::vector<Metrics> results(layers.size());
  std::vector<std::string> failures(layers.size());
  const long long count = static_cast<long long>(layers.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = probe_cell(run, layers[k], ckpt, ctx.opt.split, ctx.opt.eval_split, cfg);
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!failures[k].empty()) throw TrainingError("layer " + std::to_string(layers[k]) + ": " + failures[k]);
  }

  ojson j;
  j["schema_version"] = 1;
  j["run_id"] = run.manifest().run_id;
  j["checkpoint"] = ckpt;
  j["train_split"] = ctx.opt.split;
  j["evaluation"] = ctx.opt.eval_split.empty() ? "stratified 80/20 of the train split" : ctx.opt.eval_split;
  j["config"] = probe_config_to_json(cfg);
  ojson rows = ojson::array();
  CsvWriter csv({"layer", "checkpoint", "macro_f1", "accuracy"});
  for (std::size_t k = 0; k < layers.size(); ++k) {
    ojson e;
    e["layer"] = layers[k];
    e["metrics"] = metrics_to_json(results[k]);
    rows.push_back(std::move(e));
    csv.row({std::to_string(layers[k]), ckpt, fixed6(results[k].macro_f1), fixed6(results[k].accuracy)});
    for (const auto& w : results[k].warnings) ctx.warn("layer " + std::to_string(layers[k]) + ": " + w);
    ctx.out << "layer " << layers[k] << ": macro_f1 " << fixed6(results[k].macro_f1) << ", accuracy "
            << fixed6(results[k].accuracy) << "\n";
  }
  j["results"] = std::move(rows);
  ctx.json("probe_metrics.json", std::move(j));
  ctx.csv("probe_metrics.csv", csv.str());
  return 0;
}

int cmd_baseline(Context& ctx) {
  LabelVector y;
  std::size_t cols = ctx.opt.cols;
  std::string source;
  if (!ctx.opt.labels_file.empty()) {
    y = read_labels(ctx.opt.labels_file);
    source = ctx.opt.labels_file;
  } else {
    const RunHandle run = open_run(ctx, require_manifest(ctx));
    require_split(run, ctx.opt.split);
    y = run.labels(ctx.opt.split);
    if (cols == 0) cols = run.cols(run.manifest().layers.back(), ctx.opt.split);
    source = run.manifest().run_id + ":" + ctx.opt.split;
  }
  if (cols == 0) cols = 768;
  const ProbeConfig cfg = probe_config(ctx);
  const Metrics m = random_baseline(y.size(), cols, y, cfg, ctx.opt.seed);
  for (const auto& w : m.warnings) ctx.warn(w);
  ojson j;
  j["schema_version"] = 1;
  j["labels"] = source;
  j["rows"] = y.size();
  j["cols"] = cols;
  j["features"] = "i.i.d. standard normal";
  j["config"] = probe_config_to_json(cfg);
  j["metrics"] = metrics_to_json(m);
  ctx.json("baseline_metrics.json", std::move(j));
  CsvWriter csv({"rows", "cols", "macro_f1", "accuracy"});
  csv.row({std::to_string(y.size()), std::to_string(cols), fixed6(m.macro_f1), fixed6(m.accuracy)});
  ctx.csv("baseline_metrics.csv", csv.str());
  ctx.out << "random baseline: macro_f1 " << fixed6(m.macro_f1) << ", accuracy " << fixed6(m.accuracy) << "\n";
  return 0;
}

RsaCurve compute_rsa(Context& ctx, const RunHandle& a, const RunHandle& b) {
  const std::string ca = ctx.opt.checkpoint_a.empty() ? a.manifest().checkpoints.front() : ctx.opt.checkpoint_a;
  const std::string cb = ctx.opt.checkpoint_b.empty() ? b.manifest().checkpoints.back() : ctx.opt.checkpoint_b;
  require_split(a, ctx.opt.split);
  require_split(b, ctx.opt.split);
  const StimulusSet st = select_stimuli(a.rows(ctx.opt.split), ctx.opt.stimuli, ctx.opt.seed);
  return rsa_layer_curve(a, b, ca, cb, ctx.opt.split, st, parse_metric(ctx.opt.metric));
}

void report_rsa_failures(Context& ctx, const RsaCurve& c) {
  for (const auto& l : c.layers) {
    if (!l.score) ctx.warn("layer " + std::to_string(l.layer) + ": " + l.status);
  }
}

int cmd_rsa(Context& ctx, bool split_given) {
  // The stimulus split has no natural default, so it must be named.
  if (!split_given) throw ValidationError("rsa needs an explicit --split");
  const RunHandle a = open_run(ctx, require_manifest(ctx));
  const RunHandle b = ctx.opt.manifest_b.empty() ? a : open_run(ctx, ctx.opt.manifest_b);
  const RsaCurve curve = compute_rsa(ctx, a, b);
  report_rsa_failures(ctx, curve);
  ctx.json("rsa_curve.json", rsa_curve_to_json(curve));
  ctx.csv("rsa_curve.csv", rsa_curve_to_csv(curve));
  ctx.svg("rsa_curve.svg", rsa_curve_svg({curve}));
  for (const auto& l : curve.layers) {
    ctx.out << "layer " << l.layer << ": " << (l.score ? fixed6(l.score->value) : l.status) << "\n";
  }
  return 0;
}

int cmd_dynamics(Context& ctx) {
  const RunHandle run = open_run(ctx, require_manifest(ctx));
  require_split(run, ctx.opt.split);
  const DynamicsOptions o = dynamics_options(ctx);
  const auto [grid, summary] = compute_grid(run, ctx.opt.split, o);
  for (const auto& c : grid.cells) {
    if (!c.score) ctx.warn("layer " + std::to_string(c.layer) + " " + c.checkpoint + ": " + c.status);
  }
  ctx.csv("dynamics_grid.csv", dynamics_grid_to_csv(grid));
  ctx.json("dynamics_summary.json", dynamics_summary_to_json(grid, summary, o));
  ctx.svg("dynamics_grid.svg", dynamics_grid_svg(grid));
  for (const auto& [layer, tag] : summary.per_layer_epoch) {
    ctx.out << "layer " << layer << ": " << (tag ? *tag : "none") << "\n";
  }
  return 0;
}

int cmd_sparsity(Context& ctx) {
  const RunHandle run = open_run(ctx, require_manifest(ctx));
  require_split(run, ctx.opt.split);
  const int layer = pick_layer(ctx, run);
  const std::string ckpt = pick_checkpoint(ctx, run);
  const VarianceProfile v = explained_variance(run.matrix(layer, ckpt, ctx.opt.split));
  ojson j = variance_profile_to_json(v);
  j["run_id"] = run.manifest().run_id;
  j["layer"] = layer;
  j["checkpoint"] = ckpt;
  j["split"] = ctx.opt.split;
  ctx.json("variance_profile.json", std::move(j));
  ctx.csv("variance_profile.csv", variance_profile_to_csv(v));
  ctx.svg("variance_profile.svg", variance_svg(v));
  ctx.out << "top-2 share " << fixed6(v.top2_share) << "\n";
  return 0;
}

int cmd_pcprobe(Context& ctx) {
  const RunHandle run = open_run(ctx, require_manifest(ctx));
  require_split(run, ctx.opt.split);
  const int layer = pick_layer(ctx, run);
  const std::string ckpt = pick_checkpoint(ctx, run);
  const FeatureMatrix f = run.matrix(layer, ckpt, ctx.opt.split);
  const auto ks = ctx.opt.ks.empty() ? default_pc_probe_ks(f.cols()) : ctx.opt.ks;
  const ProbeConfig cfg = probe_config(ctx);
  const auto curve = pc_probe_curve(f, run.labels(ctx.opt.split), ks, cfg);
  ojson j = pc_probe_curve_to_json(curve);
  j["run_id"] = run.manifest().run_id;
  j["layer"] = layer;
  j["checkpoint"] = ckpt;
  j["split"] = ctx.opt.split;
  j["config"] = probe_config_to_json(cfg);
  ctx.json("pc_probe_curve.json", std::move(j));
  ctx.csv("pc_probe_curve.csv", pc_probe_curve_to_csv(curve));
  ctx.svg("pc_probe_curve.svg", pc_probe_svg(curve));
  for (const auto& p : curve) ctx.out << "k=" << p.k << ": macro_f1 " << fixed6(p.metrics.macro_f1) << "\n";
  return 0;
}

int cmd_outliers(Context& ctx) {
  const RunHandle run = open_run(ctx, require_manifest(ctx));
  require_split(run, ctx.opt.split);
  const int layer = pick_layer(ctx, run);
  const std::string ckpt = pick_checkpoint(ctx, run);
  const OutlierAnalysis a = analyze_outliers(run, ctx.opt.split, layer, ckpt, outlier_options(ctx));
  for (const auto& w : a.warnings) ctx.warn(w);
  std::vector<OutlierAnnotation> previous;
  if (!ctx.opt.annotations.empty()) previous = annotations_from_csv(read_file(ctx.opt.annotations));
  const auto rows = outlier_worksheet(a, previous);
  ctx.json("outliers.json", outlier_analysis_to_json(a));
  ctx.csv("outlier_annotations.csv", annotations_to_csv(rows));
  ctx.json("outlier_annotations.json", annotations_to_json(rows));
  ctx.svg("outliers.svg", outlier_svg(a));
  ctx.out << a.outliers.sample_indices.size() << " outlier(s) outside " << a.outliers.rectangles_used.size()
          << " rectangle(s)\n";
  return 0;
}

struct PerplexityTable {
  std::vector<std::tuple<double, std::string, std::string>> rows;  // perplexity, model, run id
  std::vector<std::string> missing;
};

// Manifests only: no label or matrix files are touched.
PerplexityTable perplexity_table(Context& ctx) {
  PerplexityTable t;
  for (const auto& path : ctx.opt.manifests) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path + ": " + e.what());
    }
    const RunManifest m = manifest_from_json(j);
    if (m.perplexity) {
      t.rows.emplace_back(*m.perplexity, m.model_name, m.run_id);
    } else {
      t.missing.push_back(m.model_name);
      ctx.warn("no perplexity recorded for model '" + m.model_name + "' (" + path + ")");
    }
  }
  std::sort(t.rows.begin(), t.rows.end());
  return t;
}

ojson perplexity_json(const PerplexityTable& t) {
  ojson j;
  j["schema_version"] = 1;
  j["order"] = "ascending perplexity; lower means closer to the target domain";
  ojson rows = ojson::array();
  std::size_t rank = 1;
  for (const auto& [p, model, run] : t.rows) {
    ojson e;
    e["rank"] = rank++;
    e["model_name"] = model;
    e["run_id"] = run;
    e["perplexity"] = p;
    rows.push_back(std::move(e));
  }
  j["table"] = std::move(rows);
  j["missing"] = t.missing;
  return j;
}

int cmd_perplexity(Context& ctx) {
  if (ctx.opt.manifests.empty()) throw ValidationError("--manifest is required");
  const PerplexityTable t = perplexity_table(ctx);
  ctx.json("perplexity.json", perplexity_json(t));
  CsvWriter csv({"rank", "model_name", "run_id", "perplexity"});
  std::size_t rank = 1;
  for (const auto& [p, model, run] : t.rows) {
    csv.row({std::to_string(rank), model, run, fixed6(p)});
    ctx.out << rank++ << ". " << model << " " << fixed6(p) << "\n";
  }
  ctx.csv("perplexity.csv", csv.str());
  return 0;
}

// Full bundle for the first manifest; every manifest feeds the perplexity
// table. A failing analysis is reported and left out.
int cmd_report(Context& ctx) {
  if (ctx.opt.manifests.empty()) throw ValidationError("--manifest is required");
  const RunHandle run = open_run(ctx, ctx.opt.manifests.front());
  require_split(run, ctx.opt.split);
  const int layer = pick_layer(ctx, run);
  const std::string ckpt = pick_checkpoint(ctx, run);
  const ProbeConfig cfg = probe_config(ctx);

  ojson j;
  j["schema_version"] = 1;
  j["run_ids"] = ojson::array();
  j["run_ids"].push_back(run.manifest().run_id);
  j["split"] = ctx.opt.split;
  j["layer"] = layer;
  j["checkpoint"] = ckpt;
  ojson warnings = ojson::array();
  auto section = [&](const std::string& name, const std::function<ojson()>& body) {
    try {
      j[name] = body();
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      j[name] = nullptr;
      const std::string msg = name + " skipped: " + e.what();
      warnings.push_back(msg);
      ctx.warn(msg);
    }
  };

  section("rsa", [&] {
    const RsaCurve c = compute_rsa(ctx, run, run);
    report_rsa_failures(ctx, c);
    ctx.svg("rsa_curve.svg", rsa_curve_svg({c}));
    return rsa_curve_to_json(c);
  });
  section("dynamics", [&] {
    const DynamicsOptions o = dynamics_options(ctx);
    const auto [grid, summary] = compute_grid(run, ctx.opt.split, o);
    ctx.svg("dynamics_grid.svg", dynamics_grid_svg(grid));
    return dynamics_summary_to_json(grid, summary, o);
  });
  const FeatureMatrix f = run.matrix(layer, ckpt, ctx.opt.split);
  section("variance_profile", [&] {
    const VarianceProfile v = explained_variance(f);
    ctx.svg("variance_profile.svg", variance_svg(v));
    return variance_profile_to_json(v);
  });
  section("pc_probe", [&] {
    const auto ks = ctx.opt.ks.empty() ? default_pc_probe_ks(f.cols()) : ctx.opt.ks;
    const auto curve = pc_probe_curve(f, run.labels(ctx.opt.split), ks, cfg);
    ctx.svg("pc_probe_curve.svg", pc_probe_svg(curve));
    return pc_probe_curve_to_json(curve);
  });
  section("outliers", [&] {
    const OutlierAnalysis a = analyze_outliers(run, ctx.opt.split, layer, ckpt, outlier_options(ctx));
    ctx.svg("outliers.svg", outlier_svg(a));
    return outlier_analysis_to_json(a);
  });
  section("probe", [&] {
    ojson p;
    p["config"] = probe_config_to_json(cfg);
    p["metrics"] = metrics_to_json(probe_cell(run, layer, ckpt, ctx.opt.split, ctx.opt.eval_split, cfg));
    return p;
  });
  section("perplexity", [&] { return perplexity_json(perplexity_table(ctx)); });
  j["warnings"] = std::move(warnings);
  ctx.json("report.json", std::move(j));
  return 0;
}

void apply_thread_limit() {
  const char* env = std::getenv("FEATURESCOPE_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ValidationError("FEATURESCOPE_THREADS must be a positive integer");
  omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Feature-space analysis of layer x checkpoint activation dumps", "featurescope"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();

  auto* manifest_opt = app.add_option("--manifest", opt.manifests, "Run manifest (repeatable where noted)");
  auto* split_opt = app.add_option("--split", opt.split, "Split name")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", opt.seed, "Seed for sampling and splits")->capture_default_str();
  app.add_option("--metric", opt.metric, "Distance for RSA")
      ->check(CLI::IsMember({"euclidean", "cosine"}))
      ->capture_default_str();
  auto* out_opt = app.add_option("--out", opt.out, "Output directory")->capture_default_str();
  app.add_option("--format", opt.formats, "Output formats (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember({"json", "csv", "svg"}));
  (void)manifest_opt;

  auto add_cell = [&](CLI::App* sub, bool many_layers) {
    sub->add_option("--layer", opt.layers, many_layers ? "Layer(s); default the last" : "Layer; default the last");
    sub->add_option("--checkpoint", opt.checkpoint, "Checkpoint tag; default the last");
  };
  auto add_probe = [&](CLI::App* sub) {
    sub->add_option("--lr", opt.learning_rate, "Initial step size")->capture_default_str();
    sub->add_option("--epochs", opt.epochs, "Gradient steps")->capture_default_str();
    sub->add_option("--l2", opt.l2, "L2 penalty on the weights")->capture_default_str();
    sub->add_option("--weighting", opt.weighting, "Class weighting")
        ->check(CLI::IsMember({"uniform", "inverse_frequency"}))
        ->capture_default_str();
    sub->add_option("--tol", opt.tol, "Convergence tolerance on the loss")->capture_default_str();
  };
  auto add_outlier = [&](CLI::App* sub) {
    sub->add_option("--m1", opt.m1, "PC1 clusters (default min(C, 3))");
    sub->add_option("--m2", opt.m2, "PC2 clusters (default 1 for C = 2, else 3)");
    sub->add_option("--n-final", opt.n_final, "Rectangles kept (default C)");
    sub->add_option("--margin", opt.margin, "Widen rectangles by this fraction of the axis range")
        ->check(CLI::NonNegativeNumber);
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic run");
  synth->add_option("--config", opt.config, "SynthConfig JSON (default config when omitted)");

  auto* validate = app.add_subcommand("validate", "Load and check run manifests");

  auto* probe = app.add_subcommand("probe", "Linear probe on frozen features");
  add_cell(probe, true);
  add_probe(probe);
  probe->add_option("--eval-split", opt.eval_split, "Evaluate on this split instead of an internal 80/20 split");

  auto* baseline = app.add_subcommand("baseline", "Probe on random Gaussian features");
  baseline->add_option("--labels", opt.labels_file, "Label file (instead of --manifest/--split)");
  baseline->add_option("--cols", opt.cols, "Feature dimension (default: the run's, else 768)");
  add_probe(baseline);

  auto* rsa = app.add_subcommand("rsa", "Layer-wise RSA between two checkpoints");
  rsa->add_option("--a", opt.checkpoint_a, "Reference checkpoint (default the first)");
  rsa->add_option("--b", opt.checkpoint_b, "Compared checkpoint (default the last)");
  rsa->add_option("--manifest-b", opt.manifest_b, "Second run for cross-run comparison");
  rsa->add_option("--stimuli", opt.stimuli, "Number of stimulus rows")->capture_default_str();

  auto* dynamics = app.add_subcommand("dynamics", "Per-cell 2-D projections and disambiguation scores");
  dynamics->add_option("--threshold", opt.threshold, "Silhouette threshold")->capture_default_str();
  dynamics->add_option("--basis", opt.basis, "per_cell or shared_final")
      ->check(CLI::IsMember({"per_cell", "shared_final"}))
      ->capture_default_str();

  auto* sparsity = app.add_subcommand("sparsity", "Explained-variance profile of one cell");
  add_cell(sparsity, false);

  auto* pcprobe = app.add_subcommand("pcprobe", "Probe on bottom-k principal subspaces");
  add_cell(pcprobe, false);
  add_probe(pcprobe);
  pcprobe->add_option("--ks", opt.ks, "Values of k")->delimiter(',');

  auto* outliers = app.add_subcommand("outliers", "Rectangle clustering and outlier worksheet");
  add_cell(outliers, false);
  add_outlier(outliers);
  outliers->add_option("--annotations", opt.annotations, "Previously edited worksheet to carry over");

  auto* perplexity = app.add_subcommand("perplexity-report", "Rank models by recorded perplexity");

  auto* report = app.add_subcommand("report", "All analyses for one run plus the perplexity table");
  add_cell(report, false);
  add_probe(report);
  add_outlier(report);
  report->add_option("--a", opt.checkpoint_a, "RSA reference checkpoint (default the first)");
  report->add_option("--b", opt.checkpoint_b, "RSA compared checkpoint (default the last)");
  report->add_option("--stimuli", opt.stimuli, "Number of RSA stimulus rows")->capture_default_str();
  report->add_option("--threshold", opt.threshold, "Silhouette threshold")->capture_default_str();
  report->add_option("--eval-split", opt.eval_split, "Probe evaluation split");
  report->add_option("--ks", opt.ks, "Values of k for the PC probe")->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  Context ctx(opt, args, out, err);
  try {
    apply_thread_limit();
    if (synth->parsed()) return cmd_synth(ctx, seed_opt->count() > 0, out_opt->count() > 0);
    if (validate->parsed()) return cmd_validate(ctx);
    if (probe->parsed()) return cmd_probe(ctx);
    if (baseline->parsed()) return cmd_baseline(ctx);
    if (rsa->parsed()) return cmd_rsa(ctx, split_opt->count() > 0);
    if (dynamics->parsed()) return cmd_dynamics(ctx);
    if (sparsity->parsed()) return cmd_sparsity(ctx);
    if (pcprobe->parsed()) return cmd_pcprobe(ctx);
    if (outliers->parsed()) return cmd_outliers(ctx);
    if (perplexity->parsed()) return cmd_perplexity(ctx);
    if (report->parsed()) return cmd_report(ctx);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace featurescope
