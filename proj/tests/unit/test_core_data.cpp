#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "../oracles.hpp"
#include "../test_util.hpp"
#include "featurescope/error.hpp"
#include "featurescope/fam.hpp"
#include "featurescope/format.hpp"
#include "featurescope/fs_util.hpp"
#include "featurescope/labels.hpp"
#include "featurescope/manifest.hpp"
#include "featurescope/rng.hpp"
#include "featurescope/stimuli.hpp"

using namespace featurescope;
using testutil::TempDir;

TEST(Rng, SplitMixReferenceVector) {
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(r.next(), 0x6E789E6AA1B965F4ull);
}

TEST(Rng, StreamsAreIndependentAndRepeatable) {
  auto a = SplitMix64::stream(7, {fnv1a64("x"), 1});
  auto b = SplitMix64::stream(7, {fnv1a64("x"), 1});
  auto c = SplitMix64::stream(7, {fnv1a64("x"), 2});
  const auto va = a.next();
  EXPECT_EQ(va, b.next());
  EXPECT_NE(va, c.next());
}

TEST(Rng, UniformAndBoundedRanges) {
  SplitMix64 r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.bounded(7), 7u);
  }
}

TEST(Rng, NormalMoments) {
  SplitMix64 r(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Fam, BytesMatchIndependentEncoding) {
  TempDir dir;
  const std::vector<float> vals = {1.0f, -2.5f, 0.1f, 3.4028235e38f, 1.17549435e-38f, -0.0f};
  write_matrix(FeatureMatrix(2, 3, vals), dir / "m.fam");
  const std::string bytes = read_file(dir / "m.fam");
  ASSERT_EQ(bytes.size(), 12u + 4u * 6u);
  EXPECT_EQ(bytes.substr(0, 4), "FAM1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto enc = oracle::binary32_le(vals[i]);
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_EQ(static_cast<std::uint8_t>(bytes[12 + 4 * i + b]), enc[b]) << "value " << i << " byte " << b;
    }
  }
  const FeatureMatrix back = read_matrix(dir / "m.fam");
  EXPECT_EQ(back, FeatureMatrix(2, 3, vals));
}

TEST(Fam, SingleCellFileIs16Bytes) {
  TempDir dir;
  write_matrix(FeatureMatrix(1, 1, {42.0f}), dir / "one.fam");
  EXPECT_EQ(std::filesystem::file_size(dir / "one.fam"), 16u);
  const auto h = read_matrix_header(dir / "one.fam");
  EXPECT_EQ(h.rows, 1u);
  EXPECT_EQ(h.cols, 1u);
  EXPECT_EQ(read_matrix(dir / "one.fam")(0, 0), 42.0f);
}

TEST(Fam, NonFiniteRejectedAndNoFileWritten) {
  TempDir dir;
  FeatureMatrix m(2, 2, {1, 2, std::numeric_limits<float>::quiet_NaN(), 4});
  EXPECT_THROW(write_matrix(m, dir / "bad.fam"), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "bad.fam"));
  FeatureMatrix inf(1, 1, {std::numeric_limits<float>::infinity()});
  EXPECT_THROW(write_matrix(inf, dir / "inf.fam"), ValidationError);
}

TEST(Fam, BadMagicAndTruncation) {
  TempDir dir;
  write_matrix(FeatureMatrix(2, 2, {1, 2, 3, 4}), dir / "ok.fam");
  std::string bytes = read_file(dir / "ok.fam");
  std::string bad = bytes;
  bad[0] = 'X';
  write_file_atomic(dir / "magic.fam", bad);
  EXPECT_THROW(read_matrix(dir / "magic.fam"), FormatError);
  EXPECT_THROW(read_matrix_header(dir / "magic.fam"), FormatError);
  write_file_atomic(dir / "short.fam", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_matrix(dir / "short.fam"), FormatError);
  EXPECT_THROW(read_matrix_header(dir / "short.fam"), FormatError);
  write_file_atomic(dir / "head.fam", bytes.substr(0, 7));
  EXPECT_THROW(read_matrix(dir / "head.fam"), FormatError);
  write_file_atomic(dir / "long.fam", bytes + "xxxx");
  EXPECT_THROW(read_matrix(dir / "long.fam"), FormatError);
  EXPECT_THROW(read_matrix(dir / "missing.fam"), IoError);
}

TEST(Fam, NanPayloadRejectedOnRead) {
  TempDir dir;
  write_matrix(FeatureMatrix(1, 2, {1, 2}), dir / "ok.fam");
  std::string bytes = read_file(dir / "ok.fam");
  const unsigned char nan[4] = {0x00, 0x00, 0xC0, 0x7F};
  for (int b = 0; b < 4; ++b) bytes[16 + b] = static_cast<char>(nan[b]);
  write_file_atomic(dir / "nan.fam", bytes);
  EXPECT_THROW(read_matrix(dir / "nan.fam"), FormatError);
}

TEST(Labels, RoundTripAndFirstSeenClassOrder) {
  TempDir dir;
  write_labels({"b", "a", "b", "c"}, dir / "l.txt");
  const LabelVector y = read_labels(dir / "l.txt");
  EXPECT_EQ(y.size(), 4u);
  EXPECT_EQ(y.class_set(), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(y.class_index(3), 2u);
  EXPECT_EQ(y.class_counts(), (std::vector<std::size_t>{2, 1, 1}));
}

TEST(Labels, RejectsSingleClassAndUnknownLabel) {
  EXPECT_THROW(LabelVector({"a", "a"}), ValidationError);
  EXPECT_THROW(LabelVector({"a", "z"}, {"a", "b"}), ValidationError);
  EXPECT_THROW(LabelVector({"a", "b"}, {"a", "b", "a"}), ValidationError);
}

TEST(Labels, BlankLineRejected) {
  TempDir dir;
  write_file_atomic(dir / "l.txt", "a\n\nb\n");
  EXPECT_THROW(read_labels(dir / "l.txt"), ValidationError);
}

TEST(Labels, SubsetKeepsClassSet) {
  const LabelVector y({"a", "b", "c", "a"});
  const std::vector<std::size_t> idx = {0, 3};
  const LabelVector s = y.subset(idx);
  EXPECT_EQ(s.class_set(), y.class_set());
  EXPECT_EQ(s.class_counts(), (std::vector<std::size_t>{2, 0, 0}));
}

namespace {

void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_file_atomic(p, j.dump(2)); }

}  // namespace

TEST(Manifest, LoadsTinyRunWithAllCells) {
  TempDir dir;
  std::vector<int> layers;
  for (int l = 1; l <= 12; ++l) layers.push_back(l);
  std::vector<std::string> ckpts = {"pretrained"};
  for (int e = 1; e <= 10; ++e) ckpts.push_back("epoch-" + std::to_string(e));
  ckpts.insert(ckpts.end(), {"epoch-15", "epoch-20"});
  const auto path = testutil::write_tiny_run(dir.path(), 6, 3, layers, ckpts);
  const RunHandle run = load_run(path);
  EXPECT_EQ(run.cell_count(), 156u);
  EXPECT_EQ(run.rows("train"), 6u);
  EXPECT_EQ(run.cols(12, "train"), 3u);
  EXPECT_TRUE(run.warnings().empty());
  EXPECT_EQ(run.matrix(3, "epoch-2", "train").rows(), 6u);
  EXPECT_EQ(run.layer_position(5), 4u);
  EXPECT_EQ(run.checkpoint_position("epoch-15"), 11u);
}

TEST(Manifest, LabelLengthMismatchReported) {
  TempDir dir;
  const auto path = testutil::write_tiny_run(dir.path(), 100, 2, {1}, {"c0"});
  std::vector<std::string> labels;
  for (int i = 0; i < 99; ++i) labels.push_back(i % 2 ? "a" : "b");
  write_labels(labels, dir / "labels/train.txt");
  try {
    load_run(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("100"), std::string::npos) << msg;
    EXPECT_NE(msg.find("99"), std::string::npos) << msg;
  }
}

TEST(Manifest, DuplicateCheckpointAndMissingPlaceholder) {
  TempDir dir;
  const auto path = testutil::write_tiny_run(dir.path(), 4, 2, {1}, {"a", "b"});
  auto j = nlohmann::json::parse(read_file(path));
  auto dup = j;
  dup["checkpoints"] = {"a", "a"};
  write_json(dir / "dup.json", dup);
  EXPECT_THROW(load_run(dir / "dup.json"), ValidationError);
  auto tmpl = j;
  tmpl["matrix_path_template"] = "feat/{layer}.fam";
  write_json(dir / "tmpl.json", tmpl);
  EXPECT_THROW(load_run(dir / "tmpl.json"), ValidationError);
  auto layers = j;
  layers["layers"] = {2, 1};
  write_json(dir / "layers.json", layers);
  EXPECT_THROW(load_run(dir / "layers.json"), ValidationError);
  auto schema = j;
  schema["schema_version"] = 99;
  write_json(dir / "schema.json", schema);
  EXPECT_THROW(load_run(dir / "schema.json"), ValidationError);
  write_file_atomic(dir / "broken.json", "{not json");
  EXPECT_THROW(load_run(dir / "broken.json"), ValidationError);
}

TEST(Manifest, MissingMatrixFile) {
  TempDir dir;
  const auto path = testutil::write_tiny_run(dir.path(), 4, 2, {1, 2}, {"a"});
  std::filesystem::remove(dir / "feat/2-a-train.fam");
  EXPECT_THROW(load_run(path), ValidationError);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.run_id = "r";
  m.model_name = "m";
  m.task_name = "t";
  m.layers = {1, 4};
  m.checkpoints = {"x", "y"};
  m.splits = {{"train", "l/train.txt"}, {"test", "l/test.txt"}};
  m.matrix_path_template = "{split}/{layer}_{checkpoint}.fam";
  m.perplexity = 1.25;
  const RunManifest back = manifest_from_json(nlohmann::json::parse(manifest_to_json(m).dump()));
  EXPECT_EQ(back.layers, m.layers);
  EXPECT_EQ(back.checkpoints, m.checkpoints);
  EXPECT_EQ(back.splits.size(), 2u);
  EXPECT_EQ(back.splits[1].labels_path, "l/test.txt");
  EXPECT_EQ(back.perplexity, 1.25);
  EXPECT_EQ(back.matrix_path(4, "y", "test"), "test/4_y.fam");
}

TEST(Manifest, MissingSplitQueried) {
  TempDir dir;
  const RunHandle run = load_run(testutil::write_tiny_run(dir.path(), 4, 2, {1}, {"a"}));
  EXPECT_FALSE(run.has_split("test"));
  EXPECT_THROW(run.labels("test"), ValidationError);
  EXPECT_THROW(run.layer_position(9), ValidationError);
}

TEST(Stimuli, ClampAndDeterminism) {
  const auto all = select_stimuli(50, 1000, 3);
  ASSERT_EQ(all.indices.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(all.indices[i], i);
  const auto a = select_stimuli(500, 40, 9);
  const auto b = select_stimuli(500, 40, 9);
  const auto c = select_stimuli(500, 40, 10);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_NE(a.indices, c.indices);
  ASSERT_EQ(a.indices.size(), 40u);
  for (std::size_t i = 1; i < a.indices.size(); ++i) EXPECT_LT(a.indices[i - 1], a.indices[i]);
  EXPECT_LT(a.indices.back(), 500u);
  EXPECT_THROW(select_stimuli(0, 5, 1), ValidationError);
}

TEST(Format, FixedSixAndDump) {
  EXPECT_EQ(fixed6(0.1234567), "0.123457");
  EXPECT_EQ(fixed6(-0.0000001), "0.000000");
  nlohmann::ordered_json j;
  j["b"] = 1.5;
  j["a"] = {1, 2};
  j["s"] = "x";
  const std::string out = dump_report(j);
  EXPECT_LT(out.find("\"b\""), out.find("\"a\""));
  EXPECT_NE(out.find("1.500000"), std::string::npos);
}

TEST(Format, CsvRoundTrip) {
  CsvWriter w({"a", "b"});
  w.row({"x,y", "say \"hi\""});
  w.row({"1", ""});
  const auto rows = parse_csv(w.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,y");
  EXPECT_EQ(rows[1][1], "say \"hi\"");
  EXPECT_EQ(rows[2][1], "");
  EXPECT_THROW(w.row({"only-one"}), ValidationError);
}
