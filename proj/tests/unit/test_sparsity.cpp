#include <gtest/gtest.h>

#include "../test_util.hpp"
#include "featurescope/error.hpp"
#include "featurescope/sparsity.hpp"

using namespace featurescope;
using testutil::random_matrix;

TEST(Variance, RankTwoPlusSmallNoise) {
  const std::size_t n = 600, d = 40;
  const Matrix scores = random_matrix(n, 2, 1);
  const Matrix basis = random_matrix(2, d, 2);
  Matrix f = scores * basis;
  const double signal = f.squaredNorm();
  Matrix noise = random_matrix(n, d, 3);
  noise *= std::sqrt(0.01 * signal / noise.squaredNorm());
  f += noise;
  const VarianceProfile v = explained_variance(to_feature_matrix(f));
  EXPECT_GE(v.top2_share, 0.95);
  EXPECT_DOUBLE_EQ(v.top2_share, v.ratios[0] + v.ratios[1]);
  EXPECT_EQ(v.ratios.size(), d);
  for (std::size_t i = 1; i < d; ++i) EXPECT_GE(v.ratios[i - 1], v.ratios[i]);
}

TEST(Variance, IsotropicHighDimension) {
  const VarianceProfile v = explained_variance(to_feature_matrix(random_matrix(2000, 768, 4)));
  EXPECT_NEAR(v.top2_share, 2.0 / 768.0, 0.01);
}

TEST(Variance, TwoDimensionsFull) {
  const VarianceProfile v = explained_variance(to_feature_matrix(random_matrix(30, 2, 5)));
  EXPECT_NEAR(v.top2_share, 1.0, 1e-12);
  EXPECT_THROW(explained_variance(FeatureMatrix(1, 3)), ValidationError);
}

namespace {

// Labels carried only by the first two coordinates, which dominate the variance.
std::pair<FeatureMatrix, LabelVector> top2_labelled(std::size_t n, std::size_t d, std::uint64_t seed) {
  Matrix f = random_matrix(n, d, seed) * 0.05;
  std::vector<std::string> l;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 3;
    const double ang = 2.0 * 3.141592653589793 * static_cast<double>(c) / 3.0;
    f(static_cast<Eigen::Index>(i), 0) += 5.0 * std::cos(ang);
    f(static_cast<Eigen::Index>(i), 1) += 5.0 * std::sin(ang);
    l.push_back("c" + std::to_string(c));
  }
  return {to_feature_matrix(f), LabelVector(l)};
}

}  // namespace

TEST(PcProbe, BottomComponentsNearChanceFullRecovers) {
  const std::size_t d = 24;
  const auto [f, y] = top2_labelled(450, d, 6);
  ProbeConfig cfg;
  cfg.seed = 3;
  const auto curve = pc_probe_curve(f, y, {d, d - 2}, cfg);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].k, d - 2);
  EXPECT_LE(curve[0].metrics.macro_f1, 1.0 / 3.0 + 0.1);
  EXPECT_GE(curve[1].metrics.macro_f1, 0.95);
}

TEST(PcProbe, FullRankEqualsCenteredProbe) {
  const auto [f, y] = top2_labelled(150, 6, 7);
  ProbeConfig cfg;
  cfg.seed = 11;
  cfg.epochs = 100;
  const auto curve = pc_probe_curve(f, y, {6}, cfg);
  const SplitIndices sp = stratified_split(y, 0.2, cfg.seed);
  Matrix x = to_dense(f);
  Matrix train(static_cast<Eigen::Index>(sp.train.size()), x.cols());
  for (std::size_t i = 0; i < sp.train.size(); ++i) train.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(sp.train[i]));
  const Eigen::RowVectorXd mu = train.colwise().mean();
  x = x.rowwise() - mu;
  Matrix tr(train.rows(), x.cols()), ev(static_cast<Eigen::Index>(sp.eval.size()), x.cols());
  for (std::size_t i = 0; i < sp.train.size(); ++i) tr.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(sp.train[i]));
  for (std::size_t i = 0; i < sp.eval.size(); ++i) ev.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(sp.eval[i]));
  const LinearProbe p = train_probe(tr, y.subset(sp.train), cfg);
  const Metrics m = eval_probe(p, ev, y.subset(sp.eval));
  EXPECT_NEAR(curve[0].metrics.macro_f1, m.macro_f1, 1e-6);
  EXPECT_NEAR(curve[0].metrics.accuracy, m.accuracy, 1e-6);
}

TEST(PcProbe, SortedDedupedAndValidated) {
  const auto [f, y] = top2_labelled(60, 8, 8);
  ProbeConfig cfg;
  cfg.epochs = 20;
  const auto curve = pc_probe_curve(f, y, {5, 1, 8, 5, 3}, cfg);
  std::vector<std::size_t> ks;
  for (const auto& p : curve) ks.push_back(p.k);
  EXPECT_EQ(ks, (std::vector<std::size_t>{1, 3, 5, 8}));
  EXPECT_THROW(pc_probe_curve(f, y, {0}, cfg), ValidationError);
  EXPECT_THROW(pc_probe_curve(f, y, {9}, cfg), ValidationError);
  EXPECT_THROW(pc_probe_curve(f, y, {}, cfg), ValidationError);
}

TEST(PcProbe, DefaultKs) {
  EXPECT_EQ(default_pc_probe_ks(768).back(), 768u);
  const auto ks = default_pc_probe_ks(10);
  EXPECT_EQ(ks, (std::vector<std::size_t>{1, 2, 4, 8, 9, 10}));
}

TEST(Sparsity, Serialization) {
  const VarianceProfile v = explained_variance(to_feature_matrix(random_matrix(20, 3, 9)));
  const std::string csv = variance_profile_to_csv(v);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "component,ratio,cumulative");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(variance_profile_to_json(v).contains("top2_share"));
}
