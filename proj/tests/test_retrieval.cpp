#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "hnce/errors.hpp"
#include "hnce/ordering.hpp"
#include "hnce/retrieval.hpp"

using namespace hnce;

namespace {

// Three queries over four labels; gold ranks are 1, 2 and 4.
struct ThreeQueries {
  TabularScorer scorer{3, 4, {4, 3, 2, 1,  //
                              1, 4, 3, 2,  //
                              4, 3, 2, 1}};
  std::vector<std::size_t> queries{0, 1, 2};
  std::vector<LabelId> golds{0, 2, 3};
};

// Entity positions whose token occurs somewhere in the mention.
std::size_t overlap(const Sequence& mention, const Sequence& entity) {
  std::size_t n = 0;
  for (int t : entity) n += std::find(mention.begin(), mention.end(), t) != mention.end();
  return n;
}

ToyCorpus small_corpus(std::uint64_t seed) {
  ToyCorpusConfig c;
  c.vocab_size = 30;
  c.entity_count = 20;
  c.mention_count = 120;
  c.length = 6;
  c.corruption = 0.2;
  c.seed = seed;
  return generate_toy_corpus(c);
}

std::vector<LabelId> validation_golds(const ToyCorpus& c) {
  std::vector<LabelId> g;
  for (auto m : c.validation_ids) g.push_back(c.golds[m]);
  return g;
}

}  // namespace

TEST(Retrieval, RankLabelsBreaksTiesByIndex) {
  EXPECT_EQ(rank_labels(std::vector<double>{1, 3, 3, 2}), (std::vector<LabelId>{1, 2, 3, 0}));
  EXPECT_EQ(rank_labels(std::vector<double>{0, 0, 0}), (std::vector<LabelId>{0, 1, 2}));
}

TEST(Retrieval, RecallOnHandBuiltFixture) {
  const ThreeQueries f;
  const auto r = retrieve(f.scorer, f.queries, f.golds, 4);
  EXPECT_EQ(r.gold_ranks, (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_DOUBLE_EQ(recall_at_k(r, f.golds, 1), 1.0 / 3);
  EXPECT_DOUBLE_EQ(recall_at_k(r, f.golds, 2), 2.0 / 3);
  EXPECT_DOUBLE_EQ(recall_at_k(r, f.golds, 3), 2.0 / 3);
  EXPECT_DOUBLE_EQ(recall_at_k(r, f.golds, 4), 1.0);
  EXPECT_EQ(r.candidates[1], (std::vector<LabelId>{1, 2, 3, 0}));
  EXPECT_EQ(r.scores[1], (std::vector<double>{4, 3, 2, 1}));
}

TEST(Retrieval, RecallIsMonotoneInK) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> t(5 * 12);
    for (double& v : t) v = standard_normal(rng);
    const TabularScorer s(5, 12, t);
    std::vector<std::size_t> q{0, 1, 2, 3, 4};
    std::vector<LabelId> g;
    for (int i = 0; i < 5; ++i) g.push_back(uniform_index(rng, 12));
    const auto r = retrieve(s, q, g, 12, 2);
    double prev = 0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double cur = recall_at_k(r, g, k);
      EXPECT_GE(cur, prev);
      prev = cur;
    }
    EXPECT_EQ(prev, 1.0);
  }
}

TEST(Retrieval, RejectsBadArguments) {
  const ThreeQueries f;
  EXPECT_THROW(retrieve(f.scorer, f.queries, f.golds, 0), ConfigError);
  EXPECT_THROW(retrieve(f.scorer, f.queries, f.golds, 5), ConfigError);
  const std::vector<LabelId> short_golds{0};
  EXPECT_THROW(retrieve(f.scorer, f.queries, short_golds, 2), ConfigError);
  const auto r = retrieve(f.scorer, f.queries, f.golds, 2);
  EXPECT_THROW(recall_at_k(r, f.golds, 3), ConfigError);
  EXPECT_THROW(recall_at_k(r, short_golds, 1), ConfigError);
}

TEST(TwoStage, SelfRerankingIsTopOneRecall) {
  const ThreeQueries f;
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto ts = two_stage(f.scorer, f.scorer, f.queries, f.golds, k);
    EXPECT_DOUBLE_EQ(ts.accuracy, 1.0 / 3);
    EXPECT_EQ(ts.predictions, (std::vector<LabelId>{0, 1, 0}));
  }
}

TEST(TwoStage, OracleRerankerAchievesRetrieverRecall) {
  const ThreeQueries f;
  std::vector<double> t(12, 0.0);
  for (std::size_t i = 0; i < 3; ++i) t[i * 4 + f.golds[i]] = 1.0;
  const TabularScorer oracle(3, 4, t);
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto ts = two_stage(f.scorer, oracle, f.queries, f.golds, k);
    const double recall = recall_at_k(retrieve(f.scorer, f.queries, f.golds, k), f.golds, k);
    EXPECT_DOUBLE_EQ(ts.accuracy, recall) << k;
    EXPECT_DOUBLE_EQ(ts.retriever_recall, recall) << k;
  }
}

TEST(TwoStage, RerankerTiesKeepRetrieverOrder) {
  const ThreeQueries f;
  const TabularScorer flat(3, 4, std::vector<double>(12, 0.0));
  const auto ts = two_stage(f.scorer, flat, f.queries, f.golds, 3);
  EXPECT_EQ(ts.predictions, (std::vector<LabelId>{0, 1, 0}));
}

TEST(Retrieval, ResultsCsv) {
  const ThreeQueries f;
  const auto r = retrieve(f.scorer, f.queries, f.golds, 2);
  std::ostringstream os;
  write_results_csv(os, r, f.golds, 9);
  EXPECT_EQ(os.str(),
            "# seed=9\n"
            "mention_id,gold,rank_of_gold,top1,recall_hit@2\n"
            "0,0,1,0,1\n"
            "1,2,2,1,1\n"
            "2,3,4,0,0\n");
}

TEST(Corpus, GenerationProperties) {
  ToyCorpusConfig c;
  c.mention_count = 4000;
  c.seed = 2;
  const auto corpus = generate_toy_corpus(c);
  EXPECT_NO_THROW(corpus.validate());
  EXPECT_EQ(corpus.entities.size(), 200u);
  EXPECT_EQ(corpus.validation_ids.size(), 800u);
  std::set<std::size_t> all(corpus.train_ids.begin(), corpus.train_ids.end());
  all.insert(corpus.validation_ids.begin(), corpus.validation_ids.end());
  EXPECT_EQ(all.size(), 4000u);
  EXPECT_TRUE(std::is_sorted(corpus.train_ids.begin(), corpus.train_ids.end()));
  // Each position survives with probability 1 - corruption / 2.
  double length = 0;
  for (const auto& m : corpus.mentions) {
    ASSERT_FALSE(m.empty());
    length += static_cast<double>(m.size());
  }
  EXPECT_NEAR(length / 4000, 8 * 0.85, 4 * std::sqrt(8 * 0.85 * 0.15 / 4000));
  EXPECT_EQ(generate_toy_corpus(c), corpus);
}

TEST(Corpus, NoCorruptionCopiesTheGold) {
  ToyCorpusConfig c;
  c.corruption = 0.0;
  c.mention_count = 50;
  const auto corpus = generate_toy_corpus(c);
  for (std::size_t m = 0; m < 50; ++m) EXPECT_EQ(corpus.mentions[m], corpus.entities[corpus.golds[m]]);
}

TEST(Corpus, MatchesGoldenFile) {
  ToyCorpusConfig c;
  c.vocab_size = 10;
  c.entity_count = 5;
  c.mention_count = 6;
  c.length = 4;
  c.seed = 3;
  c.validation_fraction = 0.5;
  EXPECT_EQ(generate_toy_corpus(c), ToyCorpus::load(std::string(HNCE_TEST_DATA_DIR) + "/golden_corpus.json"));
}

TEST(Corpus, SaveLoadRoundTripAndRejection) {
  const auto corpus = small_corpus(4);
  const auto path = std::filesystem::temp_directory_path() / "hnce_corpus_roundtrip.json";
  corpus.save(path);
  EXPECT_EQ(ToyCorpus::load(path), corpus);
  std::filesystem::remove(path);
  EXPECT_THROW(ToyCorpus::load(path), ConfigError);
  ToyCorpus bad = corpus;
  bad.golds[0] = 99;
  EXPECT_THROW(bad.validate(), ConfigError);
  ToyCorpusConfig c;
  c.corruption = 1.5;
  EXPECT_THROW(generate_toy_corpus(c), ConfigError);
}

TEST(Training, RetrieverAndRerankerLearnTheToyTask) {
  const auto corpus = small_corpus(1);
  const auto golds = validation_golds(corpus);
  for (const char* arch : {"dual", "som"}) {
    RetrieverConfig rc;
    rc.arch = ArchitectureSpec::parse(arch);
    rc.sampler = SamplerSpec::parse("mixed");
    rc.k = 8;
    rc.epochs = 5;
    const auto trained = train_retriever(corpus, rc);
    EXPECT_EQ(trained.trace.records.size(), 5 * ((corpus.train_ids.size() + 3) / 4));
    const auto r = retrieve(*trained.scorer, corpus.validation_ids, golds, 5);
    // Chance recall@5 is 5/20.
    EXPECT_GT(recall_at_k(r, golds, 5), 0.6) << arch;
    RerankerConfig kc;
    kc.k = 4;
    kc.epochs = 5;
    const auto reranker = train_reranker(corpus, *trained.scorer, kc);
    EXPECT_GT(two_stage(*trained.scorer, *reranker, corpus.validation_ids, golds, 5).accuracy, 0.3) << arch;
  }
}

TEST(Ordering, ConfusableSliceProperties) {
  ToyCorpusConfig c;
  c.seed = 5;
  const auto corpus = generate_toy_corpus(c);
  const auto slice = confusable_slice(corpus, 16, 48);
  ASSERT_EQ(slice.mention_ids.size(), 16u);
  EXPECT_TRUE(std::equal(slice.mention_ids.begin(), slice.mention_ids.end(), corpus.validation_ids.begin()));
  ASSERT_EQ(slice.entity_ids.size(), 48u);
  EXPECT_EQ(std::set<LabelId>(slice.entity_ids.begin(), slice.entity_ids.end()).size(), 48u);

  std::vector<LabelId> golds;
  for (auto m : slice.mention_ids)
    if (std::find(golds.begin(), golds.end(), corpus.golds[m]) == golds.end()) golds.push_back(corpus.golds[m]);
  ASSERT_TRUE(std::equal(golds.begin(), golds.end(), slice.entity_ids.begin()));

  // The first filler is the best-overlapping unused entity for the first mention.
  const auto& first_mention = corpus.mentions[slice.mention_ids[0]];
  long best = -1;
  LabelId best_id = 0;
  for (LabelId e = 0; e < corpus.entities.size(); ++e) {
    if (std::find(golds.begin(), golds.end(), e) != golds.end()) continue;
    const long o = static_cast<long>(overlap(first_mention, corpus.entities[e]));
    if (o > best) {
      best = o;
      best_id = e;
    }
  }
  EXPECT_EQ(slice.entity_ids[golds.size()], best_id);
  EXPECT_THROW(confusable_slice(corpus, 16, 4), ConfigError);
}
