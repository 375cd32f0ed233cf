#include <gtest/gtest.h>

#include <cmath>

#include "hnce/errors.hpp"
#include "hnce/losses.hpp"
#include "hnce/numerics.hpp"
#include "test_support.hpp"

using namespace hnce;
using hnce::testing::finite_difference;
using hnce::testing::scaled_error;

namespace {

PopulationDistribution random_population(Rng& rng, std::size_t inputs, std::size_t labels) {
  std::vector<double> marginal(inputs), rows;
  double z = 0;
  for (double& m : marginal) z += (m = 0.2 + uniform01(rng));
  for (double& m : marginal) m /= z;
  for (std::size_t x = 0; x < inputs; ++x) {
    std::vector<double> l(labels);
    for (double& v : l) v = standard_normal(rng);
    const auto p = softmax(l);
    rows.insert(rows.end(), p.begin(), p.end());
  }
  return PopulationDistribution(marginal, labels, rows);
}

TabularScorer random_tabular(Rng& rng, std::size_t inputs, std::size_t labels) {
  std::vector<double> t(inputs * labels);
  for (double& v : t) v = standard_normal(rng);
  return TabularScorer(inputs, labels, t);
}

SampleContext context_for(const Scorer& s, InputId x, LabelId gold, std::vector<double>& scores) {
  scores = s.score_all(x);
  SampleContext c;
  c.input = x;
  c.gold = gold;
  c.label_count = s.label_count();
  c.scores = scores;
  return c;
}

}  // namespace

TEST(Discriminator, ClosedForms) {
  const TabularScorer flat(1, 4, {0, 0, 0, 0});
  for (double p : nce_discriminator(flat, 0, {0, {1, 2, 3}})) EXPECT_NEAR(p, 0.25, 1e-15);

  const TabularScorer two(1, 2, {std::log(3.0), 0.0});
  const auto p = nce_discriminator(two, 0, {0, {1}});
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);

  const TabularScorer dup(1, 3, {0.3, 0.3, -1.0});
  const auto q = nce_discriminator(dup, 0, {0, {0, 2}});
  EXPECT_NEAR(q[0], q[1], 1e-15);

  EXPECT_THROW(nce_discriminator(flat, 0, {0, {}}), ConfigError);
}

TEST(CrossEntropy, AtThePopulationItIsTheEntropy) {
  Rng rng(1);
  const auto pop = random_population(rng, 3, 5);
  std::vector<double> table;
  for (InputId x = 0; x < 3; ++x)
    for (double p : pop.conditional(x)) table.push_back(std::log(p) + 4.0);
  const TabularScorer s(3, 5, table);
  const auto ce = cross_entropy_exact(s, pop);
  double h = 0;
  for (InputId x = 0; x < 3; ++x) h += pop.input_probability(x) * entropy(pop.conditional(x));
  EXPECT_NEAR(ce.value, h, 1e-12);
  EXPECT_LT(l2_norm(ce.gradient), 1e-10);
}

TEST(CrossEntropy, ScalarCases) {
  const PopulationDistribution uniform({1.0}, 2, {0.5, 0.5});
  EXPECT_NEAR(cross_entropy_exact(TabularScorer(1, 2, {0, 0}), uniform).value, std::log(2.0), 1e-15);

  const PopulationDistribution pop({1.0}, 3, {0.5, 0.3, 0.2});
  const double z = std::exp(1.0) + 1.0 + std::exp(-1.0);
  const double want = -(0.5 * (1.0 - std::log(z)) + 0.3 * (0.0 - std::log(z)) + 0.2 * (-1.0 - std::log(z)));
  EXPECT_NEAR(cross_entropy_exact(TabularScorer(1, 3, {1, 0, -1}), pop).value, want, 1e-14);
}

TEST(CrossEntropy, RejectsOversizedTables) {
  const PopulationDistribution pop({1.0}, 3, {0.5, 0.3, 0.2});
  EXPECT_THROW(cross_entropy_exact(TabularScorer(1, 3, {1, 0, -1}), pop, Gradient::Compute, 2), LimitError);
}

TEST(CrossEntropy, BatchFormMatchesFiniteDifferences) {
  Rng rng(2);
  MlpConfig c;
  c.hidden = 3;
  c.init_scale = 0.6;
  MlpScorer s(3, 4, c);
  const std::vector<std::pair<InputId, LabelId>> batch{{0, 1}, {2, 3}, {1, 1}};
  const auto fd = finite_difference(s, [&] { return cross_entropy_batch(s, batch, Gradient::Skip).value; });
  EXPECT_LT(scaled_error(cross_entropy_batch(s, batch).gradient, fd), 1e-5);
}

TEST(HardNceEmpirical, ClosedForms) {
  const TabularScorer flat(1, 64, std::vector<double>(64, 0.0));
  CandidateTuple t{0, {}};
  for (LabelId y = 1; y < 64; ++y) t.negatives.push_back(y);
  const std::vector<Example> one{{0, t}};
  EXPECT_NEAR(hard_nce_empirical(flat, one).value, std::log(64.0), 1e-13);

  std::vector<double> sat(4, 0.0);
  sat[0] = 50;
  const std::vector<Example> gold{{0, {0, {1, 2, 3}}}};
  EXPECT_LT(hard_nce_empirical(TabularScorer(1, 4, sat), gold).value, 1e-20);

  EXPECT_THROW(hard_nce_empirical(flat, std::vector<Example>{}), ConfigError);
}

TEST(HardNceEmpirical, FiniteDifferencesOnMlp) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    MlpConfig c;
    c.hidden = 4;
    c.init_scale = 0.7;
    c.features = FeatureEncoding::Gaussian;
    c.feature_dim = 3;
    c.seed = rng();
    MlpScorer s(3, 6, c);
    std::vector<Example> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({uniform_index(rng, 3), {uniform_index(rng, 6), {uniform_index(rng, 6), uniform_index(rng, 6)}}});
    const auto fd = finite_difference(s, [&] { return hard_nce_empirical(s, batch, Gradient::Skip).value; });
    EXPECT_LT(scaled_error(hard_nce_empirical(s, batch).gradient, fd), 1e-5);
  }
}

TEST(HardNceExpected, FullTupleEqualsCrossEntropy) {
  Rng rng(4);
  const HardDistinctSampler hard;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t labels = 3 + uniform_index(rng, 6);
    const auto pop = random_population(rng, 2, labels);
    const auto s = random_tabular(rng, 2, labels);
    const auto hn = hard_nce_expected(s, pop, hard, labels, Gradient::Compute, {12, 8});
    const auto ce = cross_entropy_exact(s, pop);
    EXPECT_NEAR(hn.value, ce.value, 1e-10);
    EXPECT_LT(max_abs_diff(hn.gradient, ce.gradient), 1e-10);
  }
}

TEST(HardNceExpected, SmallClosedForms) {
  const PopulationDistribution pop({1.0}, 2, {0.7, 0.3});
  const UniformSampler remaining(true);
  EXPECT_NEAR(hard_nce_expected(TabularScorer(1, 2, {0, 0}), pop, remaining, 2).value, std::log(2.0), 1e-15);
}

TEST(HardNceExpected, MatchesBruteForcePairs) {
  Rng rng(5);
  const auto pop = random_population(rng, 1, 3);
  const auto s = random_tabular(rng, 1, 3);
  const HardDistinctSampler hard;
  // Independent enumeration: y1 ~ pop, y2 ~ softmax of the other two scores.
  const auto sc = s.score_all(0);
  double want = 0;
  for (LabelId g = 0; g < 3; ++g)
    for (LabelId n = 0; n < 3; ++n) {
      if (n == g) continue;
      double z = 0;
      for (LabelId o = 0; o < 3; ++o)
        if (o != g) z += std::exp(sc[o]);
      const double h = std::exp(sc[n]) / z;
      const double loss = -sc[g] + std::log(std::exp(sc[g]) + std::exp(sc[n]));
      want += pop.conditional(0)[g] * h * loss;
    }
  EXPECT_NEAR(hard_nce_expected(s, pop, hard, 2).value, want, 1e-14);
}

TEST(HardNceExpected, EmpiricalAverageOverTuplesIsExact) {
  Rng rng(6);
  const auto pop = random_population(rng, 2, 5);
  const auto s = random_tabular(rng, 2, 5);
  const MixedSampler mixed(0.5);
  const std::size_t k = 4;
  double value = 0;
  std::vector<double> grad(s.parameter_count(), 0.0);
  std::vector<double> scores;
  for (InputId x = 0; x < 2; ++x)
    for (LabelId g = 0; g < 5; ++g) {
      const double w = pop.probability(x, g);
      const auto ctx = context_for(s, x, g, scores);
      for_each_tuple(mixed, ctx, k - 1, [&](std::span<const LabelId> t, double p) {
        const std::vector<Example> one{{x, {g, std::vector<LabelId>(t.begin(), t.end())}}};
        const auto l = hard_nce_empirical(s, one);
        value += w * p * l.value;
        axpy(w * p, l.gradient, grad);
      });
    }
  const auto exact = hard_nce_expected(s, pop, mixed, k);
  EXPECT_NEAR(exact.value, value, 1e-10);
  EXPECT_LT(max_abs_diff(exact.gradient, grad), 1e-10);
}

TEST(HardNceExpected, RespectsLimits) {
  Rng rng(7);
  const auto pop = random_population(rng, 1, 13);
  const auto s = random_tabular(rng, 1, 13);
  EXPECT_THROW(hard_nce_expected(s, pop, HardDistinctSampler(), 3), LimitError);
  const auto pop6 = random_population(rng, 1, 6);
  EXPECT_THROW(hard_nce_expected(random_tabular(rng, 1, 6), pop6, HardDistinctSampler(), 5), LimitError);
}

TEST(HardNceExpected, TabularFiniteDifferences) {
  // The analytic gradient holds h fixed, so finite differences apply only to
  // samplers that ignore the scores.
  Rng rng(8);
  const auto pop = random_population(rng, 2, 4);
  auto s = random_tabular(rng, 2, 4);
  const UniformSampler uniform(true);
  const auto fd = finite_difference(s, [&] { return hard_nce_expected(s, pop, uniform, 3, Gradient::Skip).value; });
  EXPECT_LT(scaled_error(hard_nce_expected(s, pop, uniform, 3).gradient, fd), 1e-10);
  const auto ce_fd = finite_difference(s, [&] { return cross_entropy_exact(s, pop, Gradient::Skip).value; });
  EXPECT_LT(scaled_error(cross_entropy_exact(s, pop).gradient, ce_fd), 1e-10);
}

TEST(PriorCorrected, UniformFullProposalReducesToNce) {
  Rng rng(9);
  const auto s = random_tabular(rng, 1, 5);
  const std::vector<Example> batch{{0, {2, {0, 1, 3, 4}}}};
  const std::vector<std::vector<double>> nu{{0.25, 0.25, 0.25, 0.25}};
  const auto a = prior_corrected_loss(s, batch, nu);
  const auto b = hard_nce_empirical(s, batch);
  EXPECT_NEAR(a.value, b.value, 1e-14);
  EXPECT_LT(max_abs_diff(a.gradient, b.gradient), 1e-14);

  const std::vector<Example> single{{0, {1, {3}}}};
  const std::vector<std::vector<double>> one{{1.0}};
  EXPECT_NEAR(prior_corrected_loss(s, single, one).value, hard_nce_empirical(s, single).value, 1e-14);
}

TEST(PriorCorrected, ExactProposalIsUnbiased) {
  Rng rng(10);
  const ModelIidSampler nongold(true);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pop = random_population(rng, 2, 4);
    const auto s = random_tabular(rng, 2, 4);
    const auto prior = prior_corrected_expected(s, pop, nongold, 2);
    const auto ce = cross_entropy_exact(s, pop);
    EXPECT_LT(max_abs_diff(prior.gradient, ce.gradient), 1e-8);
  }
}

TEST(PriorCorrected, RejectsNonPositiveProposals) {
  const TabularScorer s(1, 3, {0, 0, 0});
  const std::vector<Example> batch{{0, {0, {1}}}};
  EXPECT_THROW(prior_corrected_loss(s, batch, std::vector<std::vector<double>>{{0.0}}), ConfigError);
  EXPECT_THROW(prior_corrected_expected(s, PopulationDistribution({1.0}, 3, {0.2, 0.3, 0.5}), HardDistinctSampler(), 2),
               ConfigError);
}

TEST(PriorCorrected, FiniteDifferences) {
  Rng rng(11);
  auto s = random_tabular(rng, 2, 5);
  const std::vector<Example> batch{{0, {2, {0, 4}}}, {1, {1, {3, 3}}}};
  const std::vector<std::vector<double>> nu{{0.1, 0.3}, {0.2, 0.2}};
  const auto fd = finite_difference(s, [&] { return prior_corrected_loss(s, batch, nu, Gradient::Skip).value; });
  EXPECT_LT(scaled_error(prior_corrected_loss(s, batch, nu).gradient, fd), 1e-9);
}

TEST(Adversarial, GreedyTupleIsWorstCase) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_tabular(rng, 1, 6);
    const LabelId gold = uniform_index(rng, 6);
    std::vector<double> row(6, 0.0);
    row[gold] = 1.0;
    const PopulationDistribution pop({1.0}, 6, row);
    const double greedy = adversarial_loss(s, pop, GreedyTopSampler(), 3);
    for (LabelId a = 0; a < 6; ++a)
      for (LabelId b = 0; b < 6; ++b) {
        if (a == b || a == gold || b == gold) continue;
        const FixedTupleSampler fixed({{{0, gold}, {a, b}}});
        EXPECT_GE(greedy, adversarial_loss(s, pop, fixed, 3) - 1e-15);
      }
  }
}

TEST(Adversarial, FlatScoresGiveLogK) {
  const TabularScorer flat(1, 5, std::vector<double>(5, 0.7));
  const PopulationDistribution pop({1.0}, 5, {0.1, 0.2, 0.3, 0.2, 0.2});
  const HardDistinctSampler hard;
  const GreedyTopSampler greedy;
  EXPECT_NEAR(adversarial_loss(flat, pop, hard, 3), std::log(3.0), 1e-14);
  EXPECT_NEAR(adversarial_loss(flat, pop, greedy, 3), std::log(3.0), 1e-14);
  const TabularScorer two(1, 2, {0.4, -0.1});
  const PopulationDistribution p2({1.0}, 2, {0.6, 0.4});
  EXPECT_NEAR(adversarial_loss(two, p2, GreedyTopSampler(), 2), adversarial_loss(two, p2, UniformSampler(true), 2), 1e-15);
}

TEST(Losses, NonNegativeAndFinite) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pop = random_population(rng, 2, 5);
    std::vector<double> t(10);
    for (double& v : t) v = 5 * standard_normal(rng);
    const TabularScorer s(2, 5, t);
    const auto ce = cross_entropy_exact(s, pop).value;
    const auto hn = hard_nce_expected(s, pop, MixedSampler(0.5), 3).value;
    EXPECT_TRUE(std::isfinite(ce) && ce >= 0);
    EXPECT_TRUE(std::isfinite(hn) && hn >= 0);
  }
}
