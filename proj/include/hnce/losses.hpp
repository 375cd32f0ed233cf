#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hnce/negatives.hpp"
#include "hnce/population.hpp"
#include "hnce/scorer.hpp"

namespace hnce {

// Gold label first, then the K - 1 negatives.
struct CandidateTuple {
  LabelId gold = 0;
  std::vector<LabelId> negatives;

  std::size_t size() const { return 1 + negatives.size(); }
  std::vector<LabelId> labels() const;
};

struct Example {
  InputId input = 0;
  CandidateTuple candidates;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // empty when not requested
  std::size_t gold_duplicates = 0;  // negatives equal to the gold (prior-corrected loss)
};

enum class Gradient { Skip, Compute };

// Cap on |X| * |Y| for exact cross-entropy.
inline constexpr std::size_t kMaxExactTableEntries = 10'000'000;

// pi(k | x, y_1..K): softmax over the candidate scores. Requires K >= 2.
std::vector<double> nce_discriminator(const Scorer& scorer, InputId x, const CandidateTuple& tuple);

// J_CE = E_{(x,y)~pop}[-log p(y|x)], summed exactly over the table.
LossValue cross_entropy_exact(const Scorer& scorer, const PopulationDistribution& pop,
                              Gradient mode = Gradient::Compute,
                              std::size_t max_entries = kMaxExactTableEntries);

// Full-softmax cross-entropy on a sample: -(1/N) sum_i log p(y_i|x_i).
LossValue cross_entropy_batch(const Scorer& scorer, std::span<const std::pair<InputId, LabelId>> batch,
                              Gradient mode = Gradient::Compute);

// -(1/N) sum_i log pi(1 | x_i, tuple_i), accumulated in batch order.
LossValue hard_nce_empirical(const Scorer& scorer, std::span<const Example> batch,
                             Gradient mode = Gradient::Compute);

// J_HARD for an enumerable sampler: the exact expectation over
// (x, y_1) ~ pop and y_2..K ~ h(.|x, y_1). Each tuple's gradient is chained
// through the scorer separately.
LossValue hard_nce_expected(const Scorer& scorer, const PopulationDistribution& pop,
                            const NegativeSampler& sampler, std::size_t k,
                            Gradient mode = Gradient::Compute, const EnumerationLimits& limits = {});

// Score-adjusted loss for iid proposals: every negative y != gold has its
// score shifted by -log((K-1) nu(y)). proposals[i][j] is nu of the j-th
// negative of batch[i]; it must be positive unless that negative is the gold.
LossValue prior_corrected_loss(const Scorer& scorer, std::span<const Example> batch,
                               std::span<const std::vector<double>> proposals,
                               Gradient mode = Gradient::Compute);

// Exact expectation of the prior-corrected loss with negatives drawn iid from
// the sampler's proposal. Correlated samplers are rejected.
LossValue prior_corrected_expected(const Scorer& scorer, const PopulationDistribution& pop,
                                   const NegativeSampler& proposal, std::size_t k,
                                   Gradient mode = Gradient::Compute,
                                   const EnumerationLimits& limits = {});

// J_ADV(theta, h), which is J_HARD evaluated under the given h.
double adversarial_loss(const Scorer& scorer, const PopulationDistribution& pop,
                        const NegativeSampler& h, std::size_t k, const EnumerationLimits& limits = {});

// Throws LimitError when an exact tuple expectation would exceed the caps.
void check_enumeration_limits(std::size_t label_count, std::size_t k, const EnumerationLimits& limits);

}  // namespace hnce
