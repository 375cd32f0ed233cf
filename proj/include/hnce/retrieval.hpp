#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "hnce/encoder.hpp"
#include "hnce/joint.hpp"
#include "hnce/negatives.hpp"
#include "hnce/optimizer.hpp"
#include "hnce/training.hpp"

namespace hnce {

struct ToyCorpusConfig {
  std::size_t vocab_size = 50;
  std::size_t entity_count = 200;
  std::size_t mention_count = 800;
  std::size_t length = 8;
  double corruption = 0.3;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Entities are uniform random token strings. A mention copies its gold
// entity and corrupts each position with probability `corruption`: half of
// the corrupted positions are dropped, the rest replaced by a uniform noise
// token. A mention whose every token was dropped keeps one noise token.
struct ToyCorpus {
  std::size_t vocab_size = 0;
  std::vector<Sequence> entities;
  std::vector<Sequence> mentions;
  std::vector<LabelId> golds;  // one per mention
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> validation_ids;

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static ToyCorpus load(const std::filesystem::path& path);
  friend bool operator==(const ToyCorpus&, const ToyCorpus&) = default;
};

ToyCorpus generate_toy_corpus(const ToyCorpusConfig& config);

// Label indices sorted by score descending; equal scores keep the lower index first.
std::vector<LabelId> rank_labels(std::span<const double> scores);

struct RetrievalResult {
  std::size_t cutoff = 0;
  std::vector<std::size_t> queries;                // mention ids, in evaluation order
  std::vector<std::vector<LabelId>> candidates;    // top-`cutoff` per query
  std::vector<std::vector<double>> scores;         // matching candidate scores
  std::vector<std::size_t> gold_ranks;             // 1-based rank in the full ranking; empty without golds
};

// Scores every label for every query. Queries are processed in parallel and
// stored in query order.
RetrievalResult retrieve(const Scorer& scorer, std::span<const std::size_t> queries,
                         std::span<const LabelId> golds, std::size_t cutoff, std::size_t threads = 1);

// Fraction of queries whose gold is among their first k_eval candidates.
double recall_at_k(const RetrievalResult& result, std::span<const LabelId> golds, std::size_t k_eval);

struct TwoStageResult {
  double accuracy = 0.0;  // unnormalized: retrieval misses count as wrong
  double retriever_recall = 0.0;
  std::vector<LabelId> predictions;
};

// The reranker rescores the retriever's top-k candidates; ties keep the
// retriever's order.
TwoStageResult two_stage(const Scorer& retriever, const Scorer& reranker,
                         std::span<const std::size_t> queries, std::span<const LabelId> golds,
                         std::size_t k_retrieve, std::size_t threads = 1);

// mention_id,gold,rank_of_gold,top1,recall_hit@K preceded by "# seed=N".
void write_results_csv(std::ostream& out, const RetrievalResult& result,
                       std::span<const LabelId> golds, std::uint64_t seed);

struct RetrieverConfig {
  ArchitectureSpec arch;
  std::size_t hidden = 16;
  double init_scale = 0.1;
  SamplerSpec sampler;
  std::size_t k = 64;
  std::size_t batch_size = 4;
  std::size_t epochs = 4;
  OptimizerConfig optimizer{OptimizerKind::Adam, 1e-2};
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct RerankerConfig {
  std::size_t hidden = 16;
  double init_scale = 0.1;
  std::size_t k = 16;  // gold plus the retriever's top non-gold candidates
  std::size_t batch_size = 4;
  std::size_t epochs = 4;
  OptimizerConfig optimizer{OptimizerKind::Adam, 1e-2};
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct CorpusViews {
  std::shared_ptr<const std::vector<Sequence>> mentions;
  std::shared_ptr<const std::vector<Sequence>> entities;
};
CorpusViews views_of(const ToyCorpus& corpus);

std::vector<std::pair<InputId, LabelId>> training_pairs(const ToyCorpus& corpus);
std::vector<LabelId> all_golds(const ToyCorpus& corpus);

struct TrainedRetriever {
  std::unique_ptr<EncoderScorer> scorer;
  ExperimentTrace trace;
};

TrainedRetriever train_retriever(const ToyCorpus& corpus, const RetrieverConfig& config);

// Trains a cross-scoring reranker whose negatives for each training mention
// are the retriever's highest-scoring non-gold entities.
std::unique_ptr<JointScorer> train_reranker(const ToyCorpus& corpus, const Scorer& retriever,
                                            const RerankerConfig& config,
                                            ExperimentTrace* trace = nullptr);

}  // namespace hnce
