#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hnce/population.hpp"
#include "hnce/random.hpp"
#include "hnce/types.hpp"

namespace hnce {

enum class SamplerKind { Uniform, Marginal, ModelIid, HardDistinct, GreedyTop, Mixed, Fixed };

std::string to_string(SamplerKind kind);

// What a sampler may look at when drawing negatives for one (x, gold) pair.
struct SampleContext {
  InputId input = 0;
  LabelId gold = 0;
  std::size_t label_count = 0;
  std::span<const double> scores;  // s(x, .) over all labels; empty if !needs_scores()
};

// Exact tuple expectations enumerate |support|^(K-1) tuples; these caps keep
// oracle computations in the seconds range.
struct EnumerationLimits {
  std::size_t max_labels = 12;
  std::size_t max_candidates = 4;  // K, gold included
};

// A conditional distribution h(. | x, gold) over ordered tuples of negatives.
class NegativeSampler {
 public:
  virtual ~NegativeSampler() = default;

  virtual SamplerKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual bool needs_scores() const = 0;
  // Support only has tuples of distinct labels that exclude the gold.
  virtual bool distinct() const = 0;
  // Negatives are iid draws from proposal().
  virtual bool iid() const { return false; }
  virtual bool enumerable() const { return true; }

  virtual std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const = 0;

  // Probability of drawing exactly this ordered tuple.
  virtual double tuple_probability(const SampleContext& ctx,
                                   std::span<const LabelId> negatives) const = 0;

  // Labels that can appear in a tuple.
  virtual std::vector<LabelId> support(const SampleContext& ctx) const;

  // Per-label proposal of an iid sampler; throws for correlated samplers.
  virtual std::vector<double> proposal(const SampleContext& ctx) const;

  // Set for deterministic samplers.
  virtual std::optional<std::vector<LabelId>> point_mass(const SampleContext&, std::size_t) const {
    return std::nullopt;
  }
};

// Calls fn(tuple, probability) for every tuple of n negatives with positive
// probability. Distinct samplers enumerate ordered arrangements of the
// support; the rest enumerate support^n.
void for_each_tuple(const NegativeSampler& sampler, const SampleContext& ctx, std::size_t n,
                    const std::function<void(std::span<const LabelId>, double)>& fn);

// --- sampling primitives ---------------------------------------------------

// n draws from the pool. iid draws may repeat and may hit the gold; the
// distinct variant draws without replacement from pool \ {gold}.
std::vector<LabelId> sample_uniform(std::span<const LabelId> pool, LabelId gold, std::size_t n,
                                    Rng& rng, bool distinct);

// Sequential sampling without replacement from pool \ {gold}, each step
// proportional to exp(score) among the remaining labels. An empty pool means
// every label. Implemented with Gumbel top-n, which has the same ordered law.
std::vector<LabelId> sample_hard_distinct(std::span<const double> scores, LabelId gold,
                                          std::size_t n, Rng& rng,
                                          std::span<const LabelId> pool = {});

// n iid draws from softmax(scores); the gold is only excluded when requested.
std::vector<LabelId> sample_model_iid(std::span<const double> scores, std::size_t n, Rng& rng,
                                      std::optional<LabelId> excluded = std::nullopt);

// The n highest-scoring labels of pool \ {gold}; ties go to the lower index.
std::vector<LabelId> greedy_top(std::span<const double> scores, LabelId gold, std::size_t n,
                                std::span<const LabelId> pool = {});

// round(p * n), halves rounded up.
std::size_t mixed_hard_count(double p, std::size_t n);

struct MixedDraw {
  std::vector<LabelId> negatives;  // hard slots first
  std::size_t hard_count = 0;
  std::size_t random_count = 0;
};

// mixed_hard_count(p, n) hard negatives followed by uniform ones; uniform
// draws that collide with the gold or an earlier pick are redrawn.
MixedDraw sample_mixed(std::span<const double> scores, LabelId gold, std::size_t n, double p,
                       Rng& rng, std::span<const LabelId> pool = {});

// --- samplers --------------------------------------------------------------

class UniformSampler final : public NegativeSampler {
 public:
  // distinct=false: iid over the pool (gold allowed unless exclude_gold).
  UniformSampler(bool distinct, bool exclude_gold = false, std::vector<LabelId> pool = {});
  SamplerKind kind() const override { return SamplerKind::Uniform; }
  std::string name() const override;
  bool needs_scores() const override { return false; }
  bool distinct() const override { return distinct_; }
  bool iid() const override { return !distinct_; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<LabelId> support(const SampleContext& ctx) const override;
  std::vector<double> proposal(const SampleContext& ctx) const override;

 private:
  bool distinct_;
  bool exclude_gold_;
  std::vector<LabelId> pool_;
};

// iid draws from a fixed label distribution q, typically the population marginal.
class MarginalSampler final : public NegativeSampler {
 public:
  explicit MarginalSampler(std::vector<double> q, bool exclude_gold = false);
  SamplerKind kind() const override { return SamplerKind::Marginal; }
  std::string name() const override { return "marginal"; }
  bool needs_scores() const override { return false; }
  bool distinct() const override { return false; }
  bool iid() const override { return true; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<double> proposal(const SampleContext& ctx) const override;

 private:
  std::vector<double> q_;
  bool exclude_gold_;
};

// iid draws from the model distribution p(.|x); with exclude_gold the
// proposal is the model renormalized over the non-gold labels.
class ModelIidSampler final : public NegativeSampler {
 public:
  explicit ModelIidSampler(bool exclude_gold = false) : exclude_gold_(exclude_gold) {}
  SamplerKind kind() const override { return SamplerKind::ModelIid; }
  std::string name() const override { return exclude_gold_ ? "model_iid_nongold" : "model_iid"; }
  bool needs_scores() const override { return true; }
  bool distinct() const override { return false; }
  bool iid() const override { return true; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<double> proposal(const SampleContext& ctx) const override;

 private:
  bool exclude_gold_;
};

class HardDistinctSampler final : public NegativeSampler {
 public:
  explicit HardDistinctSampler(std::vector<LabelId> pool = {}) : pool_(std::move(pool)) {}
  SamplerKind kind() const override { return SamplerKind::HardDistinct; }
  std::string name() const override { return "hard"; }
  bool needs_scores() const override { return true; }
  bool distinct() const override { return true; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<LabelId> support(const SampleContext& ctx) const override;

 private:
  std::vector<LabelId> pool_;
};

class GreedyTopSampler final : public NegativeSampler {
 public:
  explicit GreedyTopSampler(std::vector<LabelId> pool = {}) : pool_(std::move(pool)) {}
  SamplerKind kind() const override { return SamplerKind::GreedyTop; }
  std::string name() const override { return "greedy_top"; }
  bool needs_scores() const override { return true; }
  bool distinct() const override { return true; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<LabelId> support(const SampleContext& ctx) const override;
  std::optional<std::vector<LabelId>> point_mass(const SampleContext& ctx, std::size_t n) const override;

 private:
  std::vector<LabelId> pool_;
};

class MixedSampler final : public NegativeSampler {
 public:
  explicit MixedSampler(double hard_fraction, std::vector<LabelId> pool = {});
  SamplerKind kind() const override { return SamplerKind::Mixed; }
  std::string name() const override;
  bool needs_scores() const override { return true; }
  bool distinct() const override { return true; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::vector<LabelId> support(const SampleContext& ctx) const override;
  double hard_fraction() const { return p_; }

 private:
  double p_;
  std::vector<LabelId> pool_;
};

// Point mass on an explicit tuple per (input, gold); used for reranker
// training on retriever candidates and for adversarial comparisons.
class FixedTupleSampler final : public NegativeSampler {
 public:
  using Table = std::map<std::pair<InputId, LabelId>, std::vector<LabelId>>;
  explicit FixedTupleSampler(Table table) : table_(std::move(table)) {}
  SamplerKind kind() const override { return SamplerKind::Fixed; }
  std::string name() const override { return "fixed"; }
  bool needs_scores() const override { return false; }
  bool distinct() const override { return false; }
  std::vector<LabelId> sample(const SampleContext& ctx, std::size_t n, Rng& rng) const override;
  double tuple_probability(const SampleContext& ctx, std::span<const LabelId> negatives) const override;
  std::optional<std::vector<LabelId>> point_mass(const SampleContext& ctx, std::size_t n) const override;

 private:
  const std::vector<LabelId>& lookup(const SampleContext& ctx, std::size_t n) const;
  Table table_;
};

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Uniform;
  double hard_fraction = 0.5;  // mixed only
  bool distinct = true;        // uniform only
  bool exclude_gold = false;   // iid kinds only
  std::vector<LabelId> pool;   // empty = every label

  // "random" (distinct uniform), "uniform" (iid), "hard", "mixed", "greedy",
  // "model_iid", "marginal".
  static SamplerSpec parse(const std::string& name, double p = 0.5);
};

// Marginal samplers draw from the population's label marginal.
std::unique_ptr<NegativeSampler> make_sampler(const SamplerSpec& spec,
                                              const PopulationDistribution* population = nullptr);

}  // namespace hnce
