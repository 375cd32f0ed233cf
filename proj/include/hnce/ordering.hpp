#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hnce/bias.hpp"
#include "hnce/encoder.hpp"
#include "hnce/optimizer.hpp"
#include "hnce/retrieval.hpp"

namespace hnce {

// Bias of each negative distribution at a checkpoint trained with the full
// softmax. The evaluated population is a slice of held-out mentions, each with
// its gold entity, over a label space made of those golds plus the entities
// sharing the most tokens with the mentions.
struct OrderingConfig {
  ArchitectureSpec arch;
  std::size_t hidden = 16;
  double init_scale = 0.1;
  std::size_t mentions = 64;
  std::size_t labels = 128;
  std::size_t k = 8;
  double mixed_fraction = 0.5;
  std::size_t simulations = 500;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 40;
  std::size_t check_every = 2;  // epochs between checkpoint evaluations
  OptimizerConfig optimizer{OptimizerKind::Adam, 1e-2};
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct OrderingSlice {
  std::vector<std::size_t> mention_ids;  // corpus mention indices, ascending
  std::vector<LabelId> entity_ids;       // golds first, then by overlap
};

// Golds are deduplicated in mention order. Each filler round walks the
// mentions in order and adds the unused entity with the largest token-overlap
// count, ties to the lowest entity index.
OrderingSlice confusable_slice(const ToyCorpus& corpus, std::size_t mentions, std::size_t labels);

struct OrderingEntry {
  std::string sampler;
  double bias_norm = 0.0;
  double standard_error_norm = 0.0;  // Euclidean norm of the per-coordinate errors
};

struct OrderingReport {
  OrderingSlice slice;
  std::size_t selected_epoch = 0;  // the checkpoint with the lowest exact CE on the slice
  double cross_entropy = 0.0;
  double accuracy = 0.0;
  std::vector<OrderingEntry> entries;  // hard, mixed, random
};

// All three samplers share one Monte-Carlo seed (common random numbers) and
// are compared against the exact cross-entropy gradient on the slice.
OrderingReport run_bias_ordering(const ToyCorpus& corpus, const OrderingConfig& config);

}  // namespace hnce
