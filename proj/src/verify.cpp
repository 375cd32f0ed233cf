#include "hnce/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hnce/bias.hpp"
#include "hnce/losses.hpp"
#include "hnce/numerics.hpp"

namespace hnce {

namespace {

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + uniform_index(rng, hi - lo + 1);
}

std::unique_ptr<PopulationDistribution> random_population(Rng& rng, std::size_t inputs, std::size_t labels) {
  std::vector<double> marginal(inputs);
  for (auto& m : marginal) m = std::exp(standard_normal(rng));
  const double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);
  for (auto& m : marginal) m /= total;
  std::vector<double> rows(inputs * labels);
  for (std::size_t x = 0; x < inputs; ++x) {
    std::vector<double> logits(labels);
    for (auto& l : logits) l = standard_normal(rng);
    const auto p = softmax(logits);
    std::copy(p.begin(), p.end(), rows.begin() + static_cast<std::ptrdiff_t>(x * labels));
  }
  return std::make_unique<PopulationDistribution>(std::move(marginal), labels, std::move(rows));
}

std::vector<double> log_table(const PopulationDistribution& pop) {
  std::vector<double> t(pop.input_count() * pop.label_count());
  for (InputId x = 0; x < pop.input_count(); ++x)
    for (LabelId y = 0; y < pop.label_count(); ++y) t[x * pop.label_count() + y] = std::log(pop.conditional(x)[y]);
  return t;
}

}  // namespace

std::unique_ptr<NegativeSampler> random_enumerable_sampler(Rng& rng, const PopulationDistribution& pop) {
  switch (uniform_index(rng, 9)) {
    case 0: return std::make_unique<UniformSampler>(false);
    case 1: return std::make_unique<UniformSampler>(false, true);
    case 2: return std::make_unique<UniformSampler>(true);
    case 3: return std::make_unique<MarginalSampler>(pop.label_marginal());
    case 4: return std::make_unique<ModelIidSampler>(false);
    case 5: return std::make_unique<ModelIidSampler>(true);
    case 6: return std::make_unique<HardDistinctSampler>();
    case 7: return std::make_unique<GreedyTopSampler>();
    default: return std::make_unique<MixedSampler>(0.5);
  }
}

OracleInstance random_oracle_instance(Rng& rng, std::size_t min_labels, std::size_t max_labels,
                                      std::size_t min_k, std::size_t max_k) {
  OracleInstance inst;
  const std::size_t labels = uniform_between(rng, min_labels, max_labels);
  const std::size_t inputs = uniform_between(rng, 1, 3);
  inst.k = std::min(labels, uniform_between(rng, min_k, max_k));
  inst.pop = random_population(rng, inputs, labels);
  std::vector<double> table(inputs * labels);
  for (auto& s : table) s = standard_normal(rng);
  inst.scorer = std::make_unique<TabularScorer>(inputs, labels, std::move(table));
  inst.sampler = random_enumerable_sampler(rng, *inst.pop);
  return inst;
}

std::vector<OracleCheck> verify_theorems(std::uint64_t seed, std::size_t instances) {
  OracleCheck t1{"theorem1_formula_vs_direct", 0.0, 1e-10, instances};
  OracleCheck t2{"model_iid_unbiased_at_pop", 0.0, 1e-10, instances};
  OracleCheck full{"distinct_k_equals_labels", 0.0, 1e-10, instances};
  OracleCheck t3{"greedy_tuple_maximizes_adv", 0.0, 1e-10, instances};
  OracleCheck prior{"prior_corrected_exact_proposal", 0.0, 1e-8, instances};

  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, i));
    {
      auto inst = random_oracle_instance(rng, 3, 8, 2, 3);
      const auto formula = bias_theorem1(*inst.scorer, *inst.pop, *inst.sampler, inst.k);
      const auto direct = bias_direct(*inst.scorer, *inst.pop, *inst.sampler, inst.k);
      t1.max_deviation = std::max(t1.max_deviation, max_relative_error(formula.bias, direct.bias, 1.0));
    }
    {
      auto inst = random_oracle_instance(rng, 3, 6, 2, 3);
      TabularScorer at_pop(inst.pop->input_count(), inst.pop->label_count(), log_table(*inst.pop));
      const ModelIidSampler iid(false);
      t2.max_deviation = std::max(t2.max_deviation, bias_direct(at_pop, *inst.pop, iid, inst.k).norm);
    }
    {
      auto inst = random_oracle_instance(rng, 2, 6, 2, 2);
      const std::size_t k = inst.pop->label_count();
      const HardDistinctSampler hard;
      const auto ce = cross_entropy_exact(*inst.scorer, *inst.pop);
      const auto nce = hard_nce_expected(*inst.scorer, *inst.pop, hard, k, Gradient::Compute, {12, 6});
      full.max_deviation = std::max({full.max_deviation, std::abs(ce.value - nce.value),
                                     max_relative_error(ce.gradient, nce.gradient, 1.0)});
    }
    {
      auto inst = random_oracle_instance(rng, 3, 8, 2, 4);
      const GreedyTopSampler greedy;
      const double greedy_value = adversarial_loss(*inst.scorer, *inst.pop, greedy, inst.k);
      // Exhaustive: the best distinct non-gold tuple for every (x, y_1).
      double best = 0.0;
      const auto& pop = *inst.pop;
      for (InputId x = 0; x < pop.input_count(); ++x) {
        const auto scores = inst.scorer->score_all(x);
        for (LabelId gold = 0; gold < pop.label_count(); ++gold) {
          const UniformSampler all_distinct(true);
          SampleContext ctx{x, gold, pop.label_count(), scores};
          double worst = -1.0;
          for_each_tuple(all_distinct, ctx, inst.k - 1, [&](std::span<const LabelId> negatives, double) {
            std::vector<double> cand(1, scores[gold]);
            for (auto y : negatives) cand.push_back(scores[y]);
            worst = std::max(worst, log_sum_exp(cand) - scores[gold]);
          });
          best += pop.probability(x, gold) * worst;
        }
      }
      t3.max_deviation = std::max(t3.max_deviation, best - greedy_value);
    }
    {
      auto inst = random_oracle_instance(rng, 4, 4, 2, 2);
      const ModelIidSampler proposal(true);
      const auto ce = cross_entropy_exact(*inst.scorer, *inst.pop);
      const auto corrected = prior_corrected_expected(*inst.scorer, *inst.pop, proposal, 2);
      prior.max_deviation = std::max(prior.max_deviation, max_abs_diff(ce.gradient, corrected.gradient));
    }
  }
  return {t1, t2, full, t3, prior};
}

}  // namespace hnce
