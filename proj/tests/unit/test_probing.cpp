#include <gtest/gtest.h>

#include <cmath>

#include "../test_util.hpp"
#include "featurescope/error.hpp"
#include "featurescope/probing.hpp"

using namespace featurescope;
using testutil::random_matrix;

namespace {

LabelVector balanced(std::size_t n, std::size_t classes = 2) {
  std::vector<std::string> l;
  for (std::size_t i = 0; i < n; ++i) l.push_back("k" + std::to_string(i % classes));
  return LabelVector(l);
}

}  // namespace

TEST(Probe, SeparableTwoPoints) {
  Matrix f(100, 2);
  std::vector<std::string> l;
  for (int i = 0; i < 100; ++i) {
    f(i, 0) = i < 50 ? -1.0 : 1.0;
    f(i, 1) = 0.0;
    l.push_back(i < 50 ? "neg" : "pos");
  }
  const LabelVector y(l);
  const LinearProbe p = train_probe(f, y, ProbeConfig{});
  const Metrics m = eval_probe(p, f, y);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_EQ(p.class_set, y.class_set());
  EXPECT_EQ(p.weights.rows(), 2);
  EXPECT_EQ(p.weights.cols(), 2);
}

TEST(Probe, IdenticalFeaturesNearChance) {
  double acc = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix f = Matrix::Ones(100, 3);
    std::vector<std::string> l;
    auto rng = SplitMix64::stream(s, {fnv1a64("perm")});
    for (int i = 0; i < 100; ++i) l.push_back(i < 50 ? "a" : "b");
    std::vector<std::size_t> perm(100);
    for (std::size_t i = 0; i < 100; ++i) perm[i] = i;
    shuffle(perm, rng);
    std::vector<std::string> shuffled;
    for (auto i : perm) shuffled.push_back(l[i]);
    const LabelVector y(shuffled);
    const Metrics m = eval_probe(train_probe(f, y, ProbeConfig{}), f, y);
    acc += m.accuracy;
    EXPECT_NEAR(m.per_class_accuracy[0] + m.per_class_accuracy[1], 1.0, 1e-9);
  }
  EXPECT_NEAR(acc / 20, 0.5, 0.05);
}

TEST(Probe, LossNonIncreasing) {
  const Matrix f = random_matrix(120, 6, 3);
  const LabelVector y = balanced(120, 3);
  TrainingTrace trace;
  ProbeConfig cfg;
  cfg.learning_rate = 2.0;  // large enough to force some rejected steps
  train_probe(f, y, cfg, &trace);
  ASSERT_GE(trace.loss.size(), 2u);
  for (std::size_t i = 1; i < trace.loss.size(); ++i) EXPECT_LE(trace.loss[i], trace.loss[i - 1] + 1e-9);
}

TEST(Probe, ObjectiveMatchesTrace) {
  const Matrix f = random_matrix(50, 4, 8);
  const LabelVector y = balanced(50);
  ProbeConfig cfg;
  cfg.epochs = 30;
  TrainingTrace trace;
  const LinearProbe p = train_probe(f, y, cfg, &trace);
  EXPECT_NEAR(probe_objective(p, f, y, cfg), trace.loss.back(), 1e-9);
}

TEST(Probe, Validation) {
  ProbeConfig bad;
  bad.learning_rate = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = ProbeConfig{};
  bad.l2_penalty = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  const LabelVector y({"a", "a", "b"}, {"a", "b", "c"});
  EXPECT_THROW(train_probe(random_matrix(3, 2, 1), y, ProbeConfig{}), ValidationError);
  EXPECT_THROW(train_probe(random_matrix(4, 2, 1), balanced(3), ProbeConfig{}), ValidationError);
  const LinearProbe p = train_probe(random_matrix(4, 2, 1), balanced(4), ProbeConfig{});
  EXPECT_THROW(eval_probe(p, random_matrix(4, 3, 1), balanced(4)), ValidationError);
  EXPECT_EQ(parse_class_weighting("uniform"), ClassWeighting::uniform);
  EXPECT_THROW(parse_class_weighting("balanced"), ValidationError);
}

TEST(Probe, HugeLearningRateBacktracks) {
  const Matrix f = random_matrix(40, 3, 1) * 1e3;
  ProbeConfig cfg;
  cfg.learning_rate = 1e6;
  cfg.epochs = 50;
  TrainingTrace trace;
  const LinearProbe p = train_probe(f, balanced(40), cfg, &trace);
  EXPECT_TRUE(p.weights.allFinite());
  EXPECT_GT(trace.rejected_steps, 0u);
  EXPECT_LT(trace.final_learning_rate, 1e6);
}

TEST(Metrics, HandComputedMacroF1) {
  const std::vector<std::string> cs = {"A", "B"};
  const std::vector<std::size_t> t = {0, 0, 1, 1}, p = {0, 1, 1, 1};
  const Metrics m = compute_metrics(t, p, cs);
  EXPECT_NEAR(m.per_class_f1[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.per_class_f1[1], 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(m.macro_f1, 0.7333333333333333, 1e-9);
  EXPECT_NEAR(m.accuracy, 0.75, 1e-12);
  EXPECT_EQ(m.confusion[0][1], 1u);
  EXPECT_EQ(m.confusion[1][1], 2u);
}

TEST(Metrics, ConstantPredictor) {
  const std::vector<std::string> cs = {"A", "B"};
  const std::vector<std::size_t> t = {0, 0, 1, 1}, p = {0, 0, 0, 0};
  const Metrics m = compute_metrics(t, p, cs);
  EXPECT_NEAR(m.accuracy, 0.5, 1e-12);
  EXPECT_NEAR(m.macro_f1, 1.0 / 3.0, 1e-12);
}

TEST(Metrics, ZeroSupportClass) {
  const std::vector<std::string> cs = {"A", "B", "C"};
  // C never occurs and is never predicted: excluded from the average.
  const std::vector<std::size_t> t = {0, 1}, p = {0, 1};
  const Metrics m = compute_metrics(t, p, cs);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  EXPECT_TRUE(std::isnan(m.per_class_f1[2]));
  EXPECT_TRUE(std::isnan(m.per_class_accuracy[2]));
  // C predicted once without support: contributes F1 = 0.
  const std::vector<std::size_t> p2 = {0, 2};
  const Metrics m2 = compute_metrics(t, p2, cs);
  EXPECT_DOUBLE_EQ(m2.per_class_f1[2], 0.0);
  EXPECT_NEAR(m2.macro_f1, (1.0 + 0.0 + 0.0) / 3.0, 1e-12);
}

TEST(Metrics, ConfusionInvariants) {
  const Matrix f = random_matrix(90, 4, 2);
  const LabelVector y = balanced(90, 3);
  const Metrics m = eval_probe(train_probe(f, y, ProbeConfig{}), f, y);
  std::size_t trace = 0, total = 0;
  const auto counts = y.class_counts();
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < 3; ++j) row += m.confusion[i][j];
    EXPECT_EQ(row, counts[i]);
    trace += m.confusion[i][i];
    total += row;
  }
  EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(trace) / static_cast<double>(total));
}

TEST(Probe, InverseWeightingHelpsMinority) {
  int wins = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto rng = SplitMix64::stream(s, {fnv1a64("imbalance")});
    const int n = 400;
    Matrix f(n, 2);
    std::vector<std::string> l;
    for (int i = 0; i < n; ++i) {
      const bool minority = i % 20 == 0;
      f(i, 0) = (minority ? 1.0 : -1.0) + 1.2 * rng.normal();
      f(i, 1) = rng.normal();
      l.push_back(minority ? "rare" : "common");
    }
    const LabelVector y(l);
    ProbeConfig inv, uni;
    uni.class_weighting = ClassWeighting::uniform;
    const std::size_t rare = y.index_of("rare");
    const double r_inv = eval_probe(train_probe(f, y, inv), f, y).per_class_accuracy[rare];
    const double r_uni = eval_probe(train_probe(f, y, uni), f, y).per_class_accuracy[rare];
    if (r_inv >= r_uni) ++wins;
  }
  EXPECT_GE(wins, 8);
}

TEST(Probe, ArgmaxInvariantToPositiveScaling) {
  const Matrix f = random_matrix(60, 5, 6);
  const LabelVector y = balanced(60, 3);
  LinearProbe p = train_probe(f, y, ProbeConfig{});
  const auto a = predict(p, f);
  p.weights *= 7.5;
  p.bias *= 7.5;
  EXPECT_EQ(predict(p, f), a);
}

TEST(Split, StratifiedAndDeterministic) {
  const LabelVector y = balanced(100, 4);
  const SplitIndices a = stratified_split(y, 0.2, 5);
  const SplitIndices b = stratified_split(y, 0.2, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.eval, b.eval);
  EXPECT_EQ(a.train.size() + a.eval.size(), 100u);
  EXPECT_EQ(a.eval.size(), 20u);
  std::vector<int> per(4, 0);
  for (auto i : a.eval) ++per[y.class_index(i)];
  for (int c : per) EXPECT_EQ(c, 5);
}

TEST(Baseline, BandAndDeterminism) {
  const LabelVector y = balanced(400);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Metrics m = random_baseline(400, 768, y, ProbeConfig{}, s);
    EXPECT_GE(m.accuracy, 0.35);
    EXPECT_LE(m.accuracy, 0.65);
  }
  const Metrics a = random_baseline(400, 32, y, ProbeConfig{}, 3);
  const Metrics b = random_baseline(400, 32, y, ProbeConfig{}, 3);
  EXPECT_EQ(a.confusion, b.confusion);
  EXPECT_EQ(a.macro_f1, b.macro_f1);
  const Metrics one = random_baseline(400, 1, y, ProbeConfig{}, 3);
  EXPECT_NEAR(one.accuracy, 0.5, 0.15);
  EXPECT_THROW(random_baseline(10, 2, y, ProbeConfig{}, 1), ValidationError);
}
