#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hnce/random.hpp"

using namespace hnce;

TEST(Random, Uniform01StaysInRange) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = uniform_open01(rng);
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Random, UniformIndexCoversRangeEvenly) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  const int n = 700000;
  for (int i = 0; i < n; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / 7.0, 0.003);
}

TEST(Random, NormalAndGumbelMoments) {
  Rng rng(3);
  const int n = 400000;
  double s = 0, s2 = 0, g = 0;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    s += z;
    s2 += z * z;
    g += standard_gumbel(rng);
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  // The Gumbel mean is the Euler-Mascheroni constant.
  EXPECT_NEAR(g / n, 0.5772156649, 0.01);
}

TEST(Random, CategoricalMatchesWeights) {
  Rng rng(4);
  const std::vector<double> w{1.0, 0.0, 3.0, 6.0};
  std::vector<int> counts(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(w, rng)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / double(n), 0.1, 0.005);
  EXPECT_NEAR(counts[2] / double(n), 0.3, 0.005);
  EXPECT_NEAR(counts[3] / double(n), 0.6, 0.005);
}

TEST(Random, DerivedSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(9, a, b));
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
  EXPECT_NE(derive_seed(9, 3, 4), derive_seed(10, 3, 4));
}

TEST(Random, SameSeedSameStream) {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(standard_normal(a), standard_normal(b));
}
