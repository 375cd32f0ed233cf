#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hnce/errors.hpp"
#include "hnce/joint.hpp"
#include "hnce/numerics.hpp"
#include "hnce/scorer.hpp"
#include "test_support.hpp"

using namespace hnce;
using hnce::testing::finite_difference;
using hnce::testing::scaled_error;

TEST(Tabular, ScoreAllIsTheRow) {
  const TabularScorer s(1, 3, {1.0, 2.0, 3.0});
  const auto row = s.score_all(0);
  EXPECT_EQ(row, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Tabular, GradientIsOneHot) {
  const TabularScorer s(2, 3, {1, 2, 3, 4, 5, 6});
  const auto g = s.grad_score(1, 2);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], i == 5 ? 1.0 : 0.0);
}

TEST(Tabular, FiniteDifferencesAreExact) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> table(12);
    for (double& v : table) v = standard_normal(rng);
    TabularScorer s(3, 4, table);
    const InputId x = uniform_index(rng, 3);
    const LabelId y = uniform_index(rng, 4);
    const auto fd = finite_difference(s, [&] { return s.score(x, y); });
    EXPECT_LT(scaled_error(s.grad_score(x, y), fd), 1e-10);
  }
}

TEST(ModelDistribution, ClosedForms) {
  const TabularScorer flat(1, 4, {0, 0, 0, 0});
  for (double p : model_distribution(flat, 0)) EXPECT_NEAR(p, 0.25, 1e-15);

  const TabularScorer logs(1, 4, {std::log(1.0), std::log(2.0), std::log(3.0), std::log(4.0)});
  const auto p = model_distribution(logs, 0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p[i], 0.1 * (i + 1), 1e-15);

  const TabularScorer huge(1, 2, {1000.0, 0.0});
  const auto q = model_distribution(huge, 0);
  EXPECT_EQ(q[0], 1.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(ModelDistribution, ShiftInvariant) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> row(6), shifted(6);
    const double c = 50 * standard_normal(rng);
    for (int i = 0; i < 6; ++i) {
      row[i] = 3 * standard_normal(rng);
      shifted[i] = row[i] + c;
    }
    const auto a = model_distribution(TabularScorer(1, 6, row), 0);
    const auto b = model_distribution(TabularScorer(1, 6, shifted), 0);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-12);
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
  }
}

TEST(Mlp, ConstantHead) {
  MlpConfig c;
  c.hidden = 3;
  MlpScorer s(2, 4, c);
  auto theta = s.parameters();
  const auto& w2 = s.layout().block("W2");
  const auto& b2 = s.layout().block("b2");
  std::fill(theta.begin() + w2.offset, theta.begin() + w2.offset + w2.size(), 0.0);
  std::fill(theta.begin() + b2.offset, theta.begin() + b2.offset + b2.size(), 1.5);
  for (double v : s.score_all(1)) EXPECT_EQ(v, 1.5);
}

TEST(Mlp, ScoreAllMatchesScore) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    MlpConfig c;
    c.hidden = 1 + uniform_index(rng, 6);
    c.features = trial % 2 ? FeatureEncoding::Gaussian : FeatureEncoding::OneHot;
    c.feature_dim = 3;
    c.init_scale = 0.5;
    c.seed = rng();
    const MlpScorer s(3, 5, c);
    const InputId x = uniform_index(rng, 3);
    const auto all = s.score_all(x);
    for (LabelId y = 0; y < 5; ++y) ASSERT_NEAR(all[y], s.score(x, y), 1e-14);
  }
}

TEST(Mlp, FiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    MlpConfig c;
    c.hidden = 3;
    c.features = FeatureEncoding::Gaussian;
    c.feature_dim = 2;
    c.init_scale = 0.7;
    c.seed = rng();
    MlpScorer s(3, 4, c);
    const InputId x = uniform_index(rng, 3);
    const LabelId y = uniform_index(rng, 4);
    const auto fd = finite_difference(s, [&] { return s.score(x, y); });
    EXPECT_LT(scaled_error(s.grad_score(x, y), fd), 1e-5) << "trial " << trial;
  }
}

TEST(Mlp, WeightedGradientIsLinear) {
  MlpConfig c;
  c.hidden = 4;
  c.init_scale = 0.5;
  const MlpScorer s(2, 5, c);
  const std::vector<LabelId> labels{1, 3, 1};
  const std::vector<double> weights{0.5, -2.0, 0.25};
  std::vector<double> g(s.parameter_count(), 0.0), want(s.parameter_count(), 0.0);
  s.accumulate_gradient(1, labels, weights, g);
  for (std::size_t k = 0; k < labels.size(); ++k) axpy(weights[k], s.grad_score(1, labels[k]), want);
  EXPECT_LT(max_abs_diff(g, want), 1e-14);

  std::vector<double> dense(5, 0.0), g2(s.parameter_count(), 0.0);
  dense[1] = 0.75;
  dense[3] = -2.0;
  s.accumulate_gradient_dense(1, dense, g2);
  EXPECT_LT(max_abs_diff(g2, want), 1e-14);
}

TEST(Joint, FiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto inputs = hnce::testing::random_sequences(rng, 2, 9, 1, 3);
    auto labels = hnce::testing::random_sequences(rng, 3, 9, 1, 3);
    JointConfig c;
    c.vocab_size = 9;
    c.hidden = 3;
    c.init_scale = 0.5;
    c.seed = rng();
    JointScorer s(inputs, labels, c);
    const InputId x = uniform_index(rng, 2);
    const LabelId y = uniform_index(rng, 3);
    const auto fd = finite_difference(s, [&] { return s.score(x, y); });
    EXPECT_LT(scaled_error(s.grad_score(x, y), fd), 1e-5) << "trial " << trial;
  }
}

TEST(Scorers, CloneIsIndependent) {
  MlpConfig c;
  c.hidden = 2;
  MlpScorer s(2, 3, c);
  auto copy = s.clone();
  s.parameters()[0] += 1.0;
  EXPECT_NE(copy->parameters()[0], s.parameters()[0]);
  EXPECT_EQ(copy->layout(), s.layout());
}

TEST(Scorers, RejectsBadShapes) {
  EXPECT_THROW(TabularScorer(2, 3, std::vector<double>(5)), ConfigError);
  MlpConfig c;
  c.hidden = 0;
  EXPECT_THROW(MlpScorer(2, 3, c), ConfigError);
}
