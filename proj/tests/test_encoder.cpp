#include <gtest/gtest.h>

#include <cmath>

#include "hnce/encoder.hpp"
#include "hnce/errors.hpp"
#include "test_support.hpp"

using namespace hnce;
using hnce::testing::multi_oracle;
using hnce::testing::poly_oracle;
using hnce::testing::som_oracle;
using hnce::testing::finite_difference;
using hnce::testing::random_matrix;
using hnce::testing::scaled_error;

TEST(Unified, DualIsLeadingInnerProduct) {
  Rng rng(1);
  const Matrix e = random_matrix(rng, 4, 3), f = random_matrix(rng, 4, 5);
  EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("dual")), hnce::testing::column_dot(e, 0, f, 0), 1e-14);
}

TEST(Unified, ZeroEmbeddingsScoreZero) {
  const Matrix z = Matrix::Zero(4, 3);
  for (const char* name : {"dual", "som", "multi-2"}) EXPECT_EQ(unified_score(z, z, nullptr, instantiate_named(name)), 0.0);
  const Matrix o = Matrix::Zero(4, 2);
  EXPECT_EQ(unified_score(z, z, &o, instantiate_named("poly-2")), 0.0);
}

TEST(Unified, SumOfMaxMatchesLoopOracle) {
  Rng rng(2);
  const Matrix e = random_matrix(rng, 4, 3), f = random_matrix(rng, 4, 3);
  EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("som")), som_oracle(e, f), 1e-12);
}

TEST(Unified, MultiOfOneIsDual) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix e = random_matrix(rng, 5, 4), f = random_matrix(rng, 5, 6);
    EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("multi-1")),
                unified_score(e, f, nullptr, instantiate_named("dual")), 1e-14);
  }
}

TEST(Unified, ClosedFormsOnRandomDraws) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index h = 2 + static_cast<Eigen::Index>(uniform_index(rng, 5));
    const Eigen::Index t = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
    const Eigen::Index u = 3 + static_cast<Eigen::Index>(uniform_index(rng, 3));  // multi-3 needs 3 columns
    const Matrix e = random_matrix(rng, h, t), f = random_matrix(rng, h, u);
    const Matrix o = random_matrix(rng, h, 2);
    EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("dual")), hnce::testing::column_dot(e, 0, f, 0), 1e-10);
    EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("som")), som_oracle(e, f), 1e-10);
    EXPECT_NEAR(unified_score(e, f, nullptr, instantiate_named("multi-3")), multi_oracle(e, f, 3), 1e-10);
    EXPECT_NEAR(unified_score(e, f, &o, instantiate_named("poly-2")), poly_oracle(e, f, o), 1e-10);
  }
}

TEST(Unified, MultiOverAllLabelColumnsIsMaxOverColumns) {
  Rng rng(5);
  const Matrix e = random_matrix(rng, 4, 3), f = random_matrix(rng, 4, 4);
  UnifiedScoreConfig c = instantiate_named("multi-4");
  EXPECT_NEAR(unified_score(e, f, nullptr, c), multi_oracle(e, f, 4), 1e-14);
}

TEST(Unified, HardTiesPickLowestIndex) {
  Matrix e(2, 1), f(2, 2);
  e << 1, 0;
  f << 1, 1, 0, 0;  // identical key columns
  UnifiedGradient g;
  unified_score(e, f, nullptr, instantiate_named("multi-2"), &g);
  EXPECT_EQ(g.label_encoding(0, 0), 1.0);
  EXPECT_EQ(g.label_encoding(0, 1), 0.0);
}

TEST(Unified, RejectsMismatchedShapes) {
  const Matrix e = Matrix::Zero(3, 2), f = Matrix::Zero(4, 2);
  EXPECT_THROW(unified_score(e, f, nullptr, instantiate_named("dual")), ConfigError);
  const Matrix g = Matrix::Zero(3, 2);
  EXPECT_THROW(unified_score(e, g, nullptr, instantiate_named("poly-2")), ConfigError);
  const Matrix bad = Matrix::Zero(3, 5);
  EXPECT_THROW(unified_score(e, g, &bad, instantiate_named("poly-2")), ConfigError);
}

TEST(Architecture, ParseAndName) {
  EXPECT_EQ(ArchitectureSpec::parse("dual").name(), "dual");
  EXPECT_EQ(ArchitectureSpec::parse("som").name(), "som");
  EXPECT_EQ(ArchitectureSpec::parse("poly").name(), "poly-16");
  EXPECT_EQ(ArchitectureSpec::parse("multi").name(), "multi-8");
  EXPECT_EQ(ArchitectureSpec::parse("poly-4").name(), "poly-4");
  EXPECT_THROW(ArchitectureSpec::parse("triple"), ConfigError);
  EXPECT_THROW(ArchitectureSpec::parse("multi-0"), ConfigError);
}

TEST(Architecture, NamedInstances) {
  const auto poly = instantiate_named("poly-3");
  EXPECT_EQ(poly.direction, Direction::LabelToInput);
  EXPECT_EQ(poly.key_reduction, KeyReduction::CodeAttention);
  EXPECT_EQ(poly.key_columns, 3u);
  EXPECT_EQ(poly.attention, Attention::Soft);
  const auto multi = instantiate_named("multi-5");
  EXPECT_EQ(multi.direction, Direction::InputToLabel);
  EXPECT_EQ(multi.query_columns, 1u);
  EXPECT_EQ(multi.key_columns, 5u);
  EXPECT_EQ(multi.attention, Attention::Hard);
  const auto som = instantiate_named("som");
  EXPECT_EQ(som.query_columns, kAllColumns);
  EXPECT_EQ(som.key_columns, kAllColumns);
}

TEST(Encoder, SummaryColumnIsMeanOfTokens) {
  auto seqs = std::make_shared<std::vector<Sequence>>(std::vector<Sequence>{{0, 2}});
  EncoderConfig c;
  c.vocab_size = 3;
  c.hidden = 2;
  c.score = instantiate_named("dual");
  c.init_scale = 1.0;
  const EncoderScorer s(seqs, seqs, c);
  const Matrix enc = s.encode_input(0);
  ASSERT_EQ(enc.cols(), 3);
  EXPECT_NEAR((enc.col(0) - 0.5 * (enc.col(1) + enc.col(2))).norm(), 0.0, 1e-15);
  EXPECT_NEAR(s.score(0, 0), s.encode_input(0).col(0).dot(s.encode_label(0).col(0)), 1e-14);
}

TEST(Encoder, ScoreAllAndCandidatesMatchScore) {
  Rng rng(6);
  for (const char* arch : {"dual", "som", "multi-3", "poly-2"}) {
    auto in = hnce::testing::random_sequences(rng, 3, 12, 1, 4);
    auto lab = hnce::testing::random_sequences(rng, 5, 12, 2, 4);
    EncoderConfig c;
    c.vocab_size = 12;
    c.hidden = 4;
    c.score = instantiate_named(arch);
    c.seed = rng();
    const EncoderScorer s(in, lab, c);
    for (InputId x = 0; x < 3; ++x) {
      const auto all = s.score_all(x);
      const std::vector<LabelId> cand{4, 0, 2};
      const auto some = s.score_candidates(x, cand);
      for (LabelId y = 0; y < 5; ++y) ASSERT_NEAR(all[y], s.score(x, y), 1e-14) << arch;
      for (std::size_t k = 0; k < cand.size(); ++k) ASSERT_NEAR(some[k], s.score(x, cand[k]), 1e-14) << arch;
    }
  }
}

TEST(Encoder, FiniteDifferencesAtTieFreePoints) {
  Rng rng(7);
  for (const char* arch : {"dual", "som", "multi-3", "poly-2"}) {
    for (int trial = 0; trial < 10; ++trial) {
      auto in = hnce::testing::random_sequences(rng, 2, 10, 1, 4);
      auto lab = hnce::testing::random_sequences(rng, 3, 10, 2, 4);
      EncoderConfig c;
      c.vocab_size = 10;
      c.hidden = 3;
      c.score = instantiate_named(arch);
      c.init_scale = 0.5;
      c.seed = rng();
      EncoderScorer s(in, lab, c);
      const InputId x = uniform_index(rng, 2);
      const LabelId y = uniform_index(rng, 3);
      const auto fd = finite_difference(s, [&] { return s.score(x, y); });
      EXPECT_LT(scaled_error(s.grad_score(x, y), fd), 1e-4) << arch << " trial " << trial;
    }
  }
}

TEST(Encoder, RejectsBadSequences) {
  EncoderConfig c;
  c.vocab_size = 3;
  auto ok = std::make_shared<std::vector<Sequence>>(std::vector<Sequence>{{0}});
  auto empty = std::make_shared<std::vector<Sequence>>(std::vector<Sequence>{{}});
  auto oov = std::make_shared<std::vector<Sequence>>(std::vector<Sequence>{{3}});
  EXPECT_THROW(EncoderScorer(ok, empty, c), ConfigError);
  EXPECT_THROW(EncoderScorer(oov, ok, c), ConfigError);
}
