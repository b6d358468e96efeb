#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "../test_util.hpp"
#include "featurescope/cli.hpp"
#include "featurescope/fs_util.hpp"
#include "featurescope/plots.hpp"
#include "featurescope/synth.hpp"

using namespace featurescope;
using testutil::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

// Three classes, default settings otherwise; shared by the CLI tests.
class CliRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    SynthConfig cfg;
    cfg.n_samples = 240;
    cfg.dim = 16;
    cfg.layers = 4;
    cfg.change_start_layer = 3;
    cfg.checkpoint_tags = {"pretrained", "epoch-3", "epoch-6", "epoch-10"};
    cfg.planted_outliers = 4;
    cfg.perplexity = 1.25;
    cfg.class_proportions = {0.5, 0.3, 0.2};
    cfg.seed = 4;
    generate_run(cfg, dir_->path() / "run");
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string manifest() { return (dir_->path() / "run/manifest.json").string(); }
  static std::filesystem::path out(const std::string& name) { return dir_->path() / name; }
  static TempDir* dir_;
};

TempDir* CliRun::dir_ = nullptr;

}  // namespace

TEST(CliBasics, HelpVersionAndUsageErrors) {
  EXPECT_EQ(run({"--version"}).code, 0);
  EXPECT_EQ(run({"--version"}).out, std::string(kToolVersion) + "\n");
  const Result help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("perplexity-report"), std::string::npos);
  const Result none = run({});
  EXPECT_EQ(none.code, 1);
  EXPECT_NE(none.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"rsa", "--bogus"}).code, 1);
}

TEST(CliBasics, MissingInputsExitCodes) {
  TempDir dir;
  EXPECT_EQ(run({"validate", "--manifest", (dir / "none.json").string(), "--out", dir.path().string()}).code, 2);
  write_file_atomic(dir / "bad.json", "{}");
  const Result bad = run({"validate", "--manifest", (dir / "bad.json").string(), "--out", dir.path().string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("error"), std::string::npos);
  EXPECT_EQ(run({"synth", "--out", (dir / "x").string(), "--config", (dir / "missing.json").string()}).code, 2);
}

TEST_F(CliRun, ValidateWritesReport) {
  const Result r = run({"validate", "--manifest", manifest(), "--out", out("v").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(out("v") / "validation.json"));
  EXPECT_TRUE(j.contains("provenance"));
  EXPECT_EQ(j["provenance"]["tool"], kToolVersion);
  EXPECT_EQ(j["provenance"]["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliRun, RsaRequiresSplitAndEmitsFiles) {
  EXPECT_EQ(run({"rsa", "--manifest", manifest(), "--out", out("r0").string()}).code, 1);
  const Result r = run({"rsa", "--manifest", manifest(), "--split", "train", "--out", out("r").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = read_file(out("r") / "rsa_curve.svg");
  const std::regex poly(R"re(<polyline class="rsa"[^>]*points="([^"]*)")re");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, poly));
  EXPECT_EQ(count(m[1].str(), ","), 4u);  // one vertex per layer
  const std::string csv = read_file(out("r") / "rsa_curve.csv");
  EXPECT_EQ(count(csv, "\n"), 5u);
  EXPECT_TRUE(std::filesystem::exists(out("r") / "rsa_curve.json"));
}

TEST_F(CliRun, FormatSelection) {
  const Result r = run({"sparsity", "--manifest", manifest(), "--format", "csv", "--out", out("f").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out("f") / "variance_profile.csv"));
  EXPECT_FALSE(std::filesystem::exists(out("f") / "variance_profile.json"));
  EXPECT_FALSE(std::filesystem::exists(out("f") / "variance_profile.svg"));
  EXPECT_EQ(run({"sparsity", "--manifest", manifest(), "--format", "pdf", "--out", out("f2").string()}).code, 1);
}

TEST_F(CliRun, OutlierSvgElementCounts) {
  const Result r = run({"outliers", "--manifest", manifest(), "--out", out("o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(out("o") / "outliers.json"));
  const std::string svg = read_file(out("o") / "outliers.svg");
  const std::string csv = read_file(out("o") / "outlier_annotations.csv");
  const std::size_t n_out = count(csv, "\n") - 1;
  EXPECT_GE(n_out, 4u);  // four planted
  EXPECT_EQ(count(svg, "class=\"cluster\""), 3u);
  EXPECT_EQ(count(svg, "class=\"outlier\""), n_out);
  EXPECT_EQ(count(svg, "class=\"point\"") + n_out, 240u);
  (void)j;
  // Widen everything so no point stays outside: no outlier markers remain.
  const Result wide = run({"outliers", "--manifest", manifest(), "--m1", "1", "--m2", "1", "--n-final", "1",
                           "--out", out("o2").string()});
  ASSERT_EQ(wide.code, 0) << wide.err;
  EXPECT_EQ(count(read_file(out("o2") / "outliers.svg"), "class=\"outlier\""), 0u);
}

TEST_F(CliRun, AnnotationsCarriedOver) {
  ASSERT_EQ(run({"outliers", "--manifest", manifest(), "--out", out("a").string()}).code, 0);
  std::string csv = read_file(out("a") / "outlier_annotations.csv");
  auto rows = annotations_from_csv(csv);
  ASSERT_FALSE(rows.empty());
  rows[0].category = OutlierCategory::inconsistent;
  rows[0].note = "reviewed";
  write_file_atomic(out("a") / "edited.csv", annotations_to_csv(rows));
  ASSERT_EQ(run({"outliers", "--manifest", manifest(), "--annotations", (out("a") / "edited.csv").string(), "--out",
                 out("a2").string()})
                .code,
            0);
  const auto again = annotations_from_csv(read_file(out("a2") / "outlier_annotations.csv"));
  EXPECT_EQ(again[0].category, OutlierCategory::inconsistent);
  EXPECT_EQ(again[0].note, "reviewed");
}

TEST_F(CliRun, AnalysesRunAndAreDeterministic) {
  const std::vector<std::vector<std::string>> cmds = {
      {"probe", "--layer", "4", "--epochs", "50"},
      {"baseline", "--cols", "8", "--epochs", "30"},
      {"dynamics"},
      {"pcprobe", "--ks", "1,14,16", "--epochs", "30"},
      {"report", "--ks", "14,16", "--epochs", "30", "--stimuli", "100"},
  };
  for (const auto& c : cmds) {
    for (const char* tag : {"d1", "d2"}) {
      std::vector<std::string> args = c;
      args.insert(args.end(), {"--manifest", manifest(), "--out", out(c[0] + tag).string()});
      const Result r = run(args);
      ASSERT_EQ(r.code, 0) << c[0] << ": " << r.err;
    }
    std::map<std::string, std::string> a, b;
    for (const auto& e : std::filesystem::directory_iterator(out(c[0] + "d1"))) a[e.path().filename()] = read_file(e.path());
    for (const auto& e : std::filesystem::directory_iterator(out(c[0] + "d2"))) b[e.path().filename()] = read_file(e.path());
    EXPECT_FALSE(a.empty()) << c[0];
    EXPECT_EQ(a, b) << c[0];
  }
  const auto rep = nlohmann::json::parse(read_file(out("reportd1") / "report.json"));
  for (const char* k : {"rsa", "dynamics", "variance_profile", "pc_probe", "outliers", "probe", "perplexity"}) {
    EXPECT_TRUE(rep.contains(k)) << k;
  }
}

TEST(CliPerplexity, OrderedAscendingWithMissingWarned) {
  TempDir dir;
  const std::vector<std::pair<std::string, double>> models = {
      {"BERT", 1.111}, {"TNLR", 1.115}, {"BioBERT", 1.113}, {"ClinicalBioBERT", 1.110}, {"PubMedBERT", 1.103}};
  std::vector<std::string> args = {"perplexity-report", "--out", (dir / "out").string()};
  for (const auto& [name, p] : models) {
    RunManifest m;
    m.run_id = name;
    m.model_name = name;
    m.task_name = "t";
    m.layers = {1};
    m.checkpoints = {"c"};
    m.splits = {{"train", "l.txt"}};
    m.matrix_path_template = "{layer}{checkpoint}{split}";
    m.perplexity = p;
    write_manifest(m, dir / (name + ".json"));
    args.insert(args.end(), {"--manifest", (dir / (name + ".json")).string()});
  }
  RunManifest none;
  none.run_id = none.model_name = "NoPpl";
  none.task_name = "t";
  none.layers = {1};
  none.checkpoints = {"c"};
  none.splits = {{"train", "l.txt"}};
  none.matrix_path_template = "{layer}{checkpoint}{split}";
  write_manifest(none, dir / "none.json");
  args.insert(args.end(), {"--manifest", (dir / "none.json").string()});
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("NoPpl"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(dir / "out/perplexity.json"));
  std::vector<std::string> order;
  for (const auto& row : j["table"]) order.push_back(row["model_name"]);
  EXPECT_EQ(order, (std::vector<std::string>{"PubMedBERT", "ClinicalBioBERT", "BERT", "BioBERT", "TNLR"}));
  EXPECT_EQ(j["missing"], nlohmann::json::array({"NoPpl"}));
  const std::string csv = read_file(dir / "out/perplexity.csv");
  EXPECT_NE(csv.find("1,PubMedBERT,PubMedBERT,1.103000"), std::string::npos);
}

TEST(Plots, PaletteAndEmptyOutlierMarkers) {
  EXPECT_EQ(palette_color(0), palette_color(10));
  EXPECT_NE(palette_color(0), palette_color(1));
  OutlierAnalysis a;
  a.labels = LabelVector({"x", "y"});
  a.points = Matrix::Zero(2, 2);
  a.points(1, 0) = 1;
  ClusterRectangle r;
  r.x_hi = 1;
  a.outliers.rectangles_used = {r};
  const std::string svg = outlier_svg(a);
  EXPECT_EQ(count(svg, "class=\"outlier\""), 0u);
  EXPECT_EQ(count(svg, "class=\"cluster\""), 1u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
