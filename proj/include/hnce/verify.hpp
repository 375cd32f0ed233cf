#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hnce/negatives.hpp"
#include "hnce/population.hpp"
#include "hnce/random.hpp"
#include "hnce/scorer.hpp"

namespace hnce {

// A small enumerable problem: random population, tabular scores and an
// enumerable sampler.
struct OracleInstance {
  std::unique_ptr<PopulationDistribution> pop;
  std::unique_ptr<TabularScorer> scorer;
  std::unique_ptr<NegativeSampler> sampler;
  std::size_t k = 2;
};

// |Y| uniform in [min_labels, max_labels], |X| in [1, 3], K uniform in
// [min_k, max_k] (capped at |Y|), scores and population logits N(0, 1).
OracleInstance random_oracle_instance(Rng& rng, std::size_t min_labels, std::size_t max_labels,
                                      std::size_t min_k, std::size_t max_k);

// One of the enumerable samplers, chosen uniformly.
std::unique_ptr<NegativeSampler> random_enumerable_sampler(Rng& rng, const PopulationDistribution& pop);

struct OracleCheck {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
  bool passed() const { return max_deviation < tolerance; }
};

// Theorem 1 formula vs direct gradients, model-iid unbiasedness at p = pop,
// the K = |Y| identity, greedy optimality of the adversarial tuple, and the
// prior-corrected loss under the exact proposal.
std::vector<OracleCheck> verify_theorems(std::uint64_t seed, std::size_t instances = 20);

}  // namespace hnce
