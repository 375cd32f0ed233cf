#include "hnce/negatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"

namespace hnce {

namespace {

std::vector<LabelId> all_labels(std::size_t count) {
  std::vector<LabelId> out(count);
  std::iota(out.begin(), out.end(), LabelId{0});
  return out;
}

// pool \ {gold}, or every non-gold label when the pool is empty.
std::vector<LabelId> non_gold(std::span<const LabelId> pool, LabelId gold, std::size_t label_count) {
  std::vector<LabelId> out;
  if (pool.empty()) {
    out.reserve(label_count);
    for (LabelId y = 0; y < label_count; ++y)
      if (y != gold) out.push_back(y);
  } else {
    for (LabelId y : pool)
      if (y != gold) out.push_back(y);
  }
  return out;
}

void require_distinct_capacity(std::size_t available, std::size_t n) {
  if (available < n) {
    std::ostringstream msg;
    msg << "pool too small: " << n << " distinct negatives requested but only " << available
        << " non-gold labels are available";
    throw ConfigError(msg.str());
  }
}

bool has_duplicates(std::span<const LabelId> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j]) return true;
  return false;
}

bool contains(std::span<const LabelId> labels, LabelId y) {
  return std::find(labels.begin(), labels.end(), y) != labels.end();
}

void validate_pool(const std::vector<LabelId>& pool) {
  if (has_duplicates(pool)) throw ConfigError("candidate pool contains duplicates");
}

// log P of an ordered draw without replacement proportional to exp(score)
// from `candidates`, or -inf if the tuple leaves the support.
double sequential_log_probability(std::span<const double> scores,
                                  std::span<const LabelId> candidates,
                                  std::span<const LabelId> tuple) {
  if (has_duplicates(tuple)) return -std::numeric_limits<double>::infinity();
  std::vector<LabelId> remaining(candidates.begin(), candidates.end());
  std::vector<double> buffer;
  double log_p = 0.0;
  for (LabelId y : tuple) {
    const auto it = std::find(remaining.begin(), remaining.end(), y);
    if (it == remaining.end()) return -std::numeric_limits<double>::infinity();
    buffer.clear();
    for (LabelId r : remaining) buffer.push_back(scores[r]);
    log_p += scores[y] - log_sum_exp(buffer);
    remaining.erase(it);
  }
  return log_p;
}

// Probability of an ordered uniform draw without replacement from `available` labels.
double falling_uniform_probability(std::size_t available, std::size_t count) {
  double p = 1.0;
  for (std::size_t k = 0; k < count; ++k) p /= static_cast<double>(available - k);
  return p;
}

// Uniform distinct draws appended to `chosen`, redrawing collisions.
void append_uniform_distinct(std::span<const LabelId> candidates, std::size_t count,
                             std::vector<LabelId>& chosen, Rng& rng) {
  for (std::size_t k = 0; k < count; ++k) {
    LabelId y;
    do {
      y = candidates[uniform_index(rng, candidates.size())];
    } while (contains(chosen, y));
    chosen.push_back(y);
  }
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::Marginal: return "marginal";
    case SamplerKind::ModelIid: return "model_iid";
    case SamplerKind::HardDistinct: return "hard";
    case SamplerKind::GreedyTop: return "greedy_top";
    case SamplerKind::Mixed: return "mixed";
    case SamplerKind::Fixed: return "fixed";
  }
  return "?";
}

std::vector<LabelId> NegativeSampler::support(const SampleContext& ctx) const {
  return all_labels(ctx.label_count);
}

std::vector<double> NegativeSampler::proposal(const SampleContext&) const {
  throw ConfigError("sampler '" + name() + "' draws correlated negatives; an iid proposal is required");
}

void for_each_tuple(const NegativeSampler& sampler, const SampleContext& ctx, std::size_t n,
                    const std::function<void(std::span<const LabelId>, double)>& fn) {
  if (!sampler.enumerable())
    throw ConfigError("sampler '" + sampler.name() + "' has no enumerable density");
  if (n == 0) {
    fn({}, 1.0);
    return;
  }
  if (auto point = sampler.point_mass(ctx, n)) {
    fn(*point, 1.0);
    return;
  }
  const auto labels = sampler.support(ctx);
  if (labels.empty()) return;
  const bool distinct = sampler.distinct();
  std::vector<LabelId> tuple(n);
  std::vector<std::size_t> index(n, 0);
  std::vector<bool> used(labels.size(), false);
  // Depth-first walk over positions; distinct samplers skip used labels.
  std::function<void(std::size_t)> walk = [&](std::size_t pos) {
    if (pos == n) {
      const double p = sampler.tuple_probability(ctx, tuple);
      if (p > 0.0) fn(tuple, p);
      return;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (distinct && used[i]) continue;
      tuple[pos] = labels[i];
      used[i] = true;
      walk(pos + 1);
      used[i] = false;
    }
  };
  walk(0);
}

// --- primitives ------------------------------------------------------------

std::vector<LabelId> sample_uniform(std::span<const LabelId> pool, LabelId gold, std::size_t n,
                                    Rng& rng, bool distinct) {
  if (n == 0) throw ConfigError("sample_uniform: n must be at least 1");
  if (pool.empty()) throw ConfigError("sample_uniform: empty pool");
  std::vector<LabelId> out;
  out.reserve(n);
  if (!distinct) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(pool[uniform_index(rng, pool.size())]);
    return out;
  }
  const std::size_t available = static_cast<std::size_t>(
      std::count_if(pool.begin(), pool.end(), [gold](LabelId y) { return y != gold; }));
  require_distinct_capacity(available, n);
  for (std::size_t k = 0; k < n; ++k) {
    LabelId y;
    do {
      y = pool[uniform_index(rng, pool.size())];
    } while (y == gold || contains(out, y));
    out.push_back(y);
  }
  return out;
}

std::vector<LabelId> sample_hard_distinct(std::span<const double> scores, LabelId gold,
                                          std::size_t n, Rng& rng,
                                          std::span<const LabelId> pool) {
  const auto candidates = non_gold(pool, gold, scores.size());
  require_distinct_capacity(candidates.size(), n);
  std::vector<std::pair<double, LabelId>> keyed;
  keyed.reserve(candidates.size());
  for (LabelId y : candidates) keyed.emplace_back(scores[y] + standard_gumbel(rng), y);
  auto by_key = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(n), keyed.end(), by_key);
  std::vector<LabelId> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(keyed[k].second);
  return out;
}

std::vector<LabelId> sample_model_iid(std::span<const double> scores, std::size_t n, Rng& rng,
                                      std::optional<LabelId> excluded) {
  std::vector<double> weights(scores.begin(), scores.end());
  if (excluded) weights[*excluded] = -std::numeric_limits<double>::infinity();
  softmax_inplace(weights);
  std::vector<LabelId> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(sample_categorical(weights, rng));
  return out;
}

std::vector<LabelId> greedy_top(std::span<const double> scores, LabelId gold, std::size_t n,
                                std::span<const LabelId> pool) {
  auto candidates = non_gold(pool, gold, scores.size());
  require_distinct_capacity(candidates.size(), n);
  auto better = [&](LabelId a, LabelId b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

std::size_t mixed_hard_count(double p, std::size_t n) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("hard fraction must lie in [0, 1]");
  return std::min(n, static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5)));
}

MixedDraw sample_mixed(std::span<const double> scores, LabelId gold, std::size_t n, double p,
                       Rng& rng, std::span<const LabelId> pool) {
  const std::size_t hard = mixed_hard_count(p, n);
  const auto candidates = non_gold(pool, gold, scores.size());
  require_distinct_capacity(candidates.size(), n);
  MixedDraw draw;
  if (hard > 0) draw.negatives = sample_hard_distinct(scores, gold, hard, rng, pool);
  append_uniform_distinct(candidates, n - hard, draw.negatives, rng);
  draw.hard_count = hard;
  draw.random_count = n - hard;
  return draw;
}

// --- uniform ---------------------------------------------------------------

UniformSampler::UniformSampler(bool distinct, bool exclude_gold, std::vector<LabelId> pool)
    : distinct_(distinct), exclude_gold_(exclude_gold || distinct), pool_(std::move(pool)) {
  validate_pool(pool_);
}

std::string UniformSampler::name() const {
  if (distinct_) return "random";
  return exclude_gold_ ? "uniform_iid_nongold" : "uniform_iid";
}

std::vector<LabelId> UniformSampler::support(const SampleContext& ctx) const {
  if (exclude_gold_) return non_gold(pool_, ctx.gold, ctx.label_count);
  return pool_.empty() ? all_labels(ctx.label_count) : pool_;
}

std::vector<LabelId> UniformSampler::sample(const SampleContext& ctx, std::size_t n, Rng& rng) const {
  const auto labels = support(ctx);
  if (distinct_) return sample_uniform(labels, ctx.gold, n, rng, true);
  if (labels.empty()) throw ConfigError("uniform sampler: empty support");
  return sample_uniform(labels, ctx.gold, n, rng, false);
}

double UniformSampler::tuple_probability(const SampleContext& ctx,
                                         std::span<const LabelId> negatives) const {
  const auto labels = support(ctx);
  for (LabelId y : negatives)
    if (!contains(labels, y)) return 0.0;
  if (distinct_) {
    if (has_duplicates(negatives) || negatives.size() > labels.size()) return 0.0;
    return falling_uniform_probability(labels.size(), negatives.size());
  }
  return std::pow(1.0 / static_cast<double>(labels.size()), static_cast<double>(negatives.size()));
}

std::vector<double> UniformSampler::proposal(const SampleContext& ctx) const {
  if (distinct_) return NegativeSampler::proposal(ctx);
  std::vector<double> q(ctx.label_count, 0.0);
  const auto labels = support(ctx);
  for (LabelId y : labels) q[y] = 1.0 / static_cast<double>(labels.size());
  return q;
}

// --- marginal --------------------------------------------------------------

MarginalSampler::MarginalSampler(std::vector<double> q, bool exclude_gold)
    : q_(std::move(q)), exclude_gold_(exclude_gold) {
  double sum = 0.0;
  for (double v : q_) {
    if (!(v >= 0.0)) throw ConfigError("marginal sampler: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("marginal sampler: q must sum to 1");
}

std::vector<double> MarginalSampler::proposal(const SampleContext& ctx) const {
  if (ctx.label_count != q_.size()) throw ConfigError("marginal sampler: label count mismatch");
  std::vector<double> q = q_;
  if (exclude_gold_) {
    const double rest = 1.0 - q[ctx.gold];
    if (!(rest > 0.0)) throw ConfigError("marginal sampler: no mass outside the gold");
    q[ctx.gold] = 0.0;
    for (double& v : q) v /= rest;
  }
  return q;
}

std::vector<LabelId> MarginalSampler::sample(const SampleContext& ctx, std::size_t n, Rng& rng) const {
  const auto q = proposal(ctx);
  std::vector<LabelId> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(sample_categorical(q, rng));
  return out;
}

double MarginalSampler::tuple_probability(const SampleContext& ctx,
                                          std::span<const LabelId> negatives) const {
  const auto q = proposal(ctx);
  double p = 1.0;
  for (LabelId y : negatives) p *= q[y];
  return p;
}

// --- model iid -------------------------------------------------------------

std::vector<double> ModelIidSampler::proposal(const SampleContext& ctx) const {
  std::vector<double> w(ctx.scores.begin(), ctx.scores.end());
  if (w.size() != ctx.label_count) throw ConfigError("model_iid sampler needs scores for every label");
  if (exclude_gold_) w[ctx.gold] = -std::numeric_limits<double>::infinity();
  softmax_inplace(w);
  return w;
}

std::vector<LabelId> ModelIidSampler::sample(const SampleContext& ctx, std::size_t n, Rng& rng) const {
  return sample_model_iid(ctx.scores, n, rng,
                          exclude_gold_ ? std::optional<LabelId>(ctx.gold) : std::nullopt);
}

double ModelIidSampler::tuple_probability(const SampleContext& ctx,
                                          std::span<const LabelId> negatives) const {
  const auto q = proposal(ctx);
  double p = 1.0;
  for (LabelId y : negatives) p *= q[y];
  return p;
}

// --- hard distinct ---------------------------------------------------------

std::vector<LabelId> HardDistinctSampler::support(const SampleContext& ctx) const {
  return non_gold(pool_, ctx.gold, ctx.label_count);
}

std::vector<LabelId> HardDistinctSampler::sample(const SampleContext& ctx, std::size_t n,
                                                 Rng& rng) const {
  return sample_hard_distinct(ctx.scores, ctx.gold, n, rng, pool_);
}

double HardDistinctSampler::tuple_probability(const SampleContext& ctx,
                                              std::span<const LabelId> negatives) const {
  return std::exp(sequential_log_probability(ctx.scores, support(ctx), negatives));
}

// --- greedy ----------------------------------------------------------------

std::vector<LabelId> GreedyTopSampler::support(const SampleContext& ctx) const {
  return non_gold(pool_, ctx.gold, ctx.label_count);
}

std::vector<LabelId> GreedyTopSampler::sample(const SampleContext& ctx, std::size_t n, Rng&) const {
  return greedy_top(ctx.scores, ctx.gold, n, pool_);
}

double GreedyTopSampler::tuple_probability(const SampleContext& ctx,
                                           std::span<const LabelId> negatives) const {
  const auto top = greedy_top(ctx.scores, ctx.gold, negatives.size(), pool_);
  return std::equal(top.begin(), top.end(), negatives.begin(), negatives.end()) ? 1.0 : 0.0;
}

std::optional<std::vector<LabelId>> GreedyTopSampler::point_mass(const SampleContext& ctx,
                                                                 std::size_t n) const {
  return greedy_top(ctx.scores, ctx.gold, n, pool_);
}

// --- mixed -----------------------------------------------------------------

MixedSampler::MixedSampler(double hard_fraction, std::vector<LabelId> pool)
    : p_(hard_fraction), pool_(std::move(pool)) {
  mixed_hard_count(p_, 0);
  validate_pool(pool_);
}

std::string MixedSampler::name() const {
  std::ostringstream out;
  out << "mixed-" << static_cast<int>(std::lround(p_ * 100.0));
  return out.str();
}

std::vector<LabelId> MixedSampler::support(const SampleContext& ctx) const {
  return non_gold(pool_, ctx.gold, ctx.label_count);
}

std::vector<LabelId> MixedSampler::sample(const SampleContext& ctx, std::size_t n, Rng& rng) const {
  return sample_mixed(ctx.scores, ctx.gold, n, p_, rng, pool_).negatives;
}

double MixedSampler::tuple_probability(const SampleContext& ctx,
                                       std::span<const LabelId> negatives) const {
  const std::size_t hard = mixed_hard_count(p_, negatives.size());
  if (has_duplicates(negatives)) return 0.0;
  const auto candidates = support(ctx);
  for (LabelId y : negatives)
    if (!contains(candidates, y)) return 0.0;
  const double log_hard =
      sequential_log_probability(ctx.scores, candidates, negatives.subspan(0, hard));
  return std::exp(log_hard) *
         falling_uniform_probability(candidates.size() - hard, negatives.size() - hard);
}

// --- fixed -----------------------------------------------------------------

const std::vector<LabelId>& FixedTupleSampler::lookup(const SampleContext& ctx, std::size_t n) const {
  const auto it = table_.find({ctx.input, ctx.gold});
  if (it == table_.end()) throw ConfigError("fixed sampler: no tuple for this (input, gold)");
  if (it->second.size() != n) throw ConfigError("fixed sampler: stored tuple has the wrong length");
  return it->second;
}

std::vector<LabelId> FixedTupleSampler::sample(const SampleContext& ctx, std::size_t n, Rng&) const {
  return lookup(ctx, n);
}

double FixedTupleSampler::tuple_probability(const SampleContext& ctx,
                                            std::span<const LabelId> negatives) const {
  const auto& t = lookup(ctx, negatives.size());
  return std::equal(t.begin(), t.end(), negatives.begin(), negatives.end()) ? 1.0 : 0.0;
}

std::optional<std::vector<LabelId>> FixedTupleSampler::point_mass(const SampleContext& ctx,
                                                                  std::size_t n) const {
  return lookup(ctx, n);
}

// --- factory ---------------------------------------------------------------

SamplerSpec SamplerSpec::parse(const std::string& name, double p) {
  SamplerSpec spec;
  spec.hard_fraction = p;
  if (name == "random") {
    spec.kind = SamplerKind::Uniform;
    spec.distinct = true;
  } else if (name == "uniform") {
    spec.kind = SamplerKind::Uniform;
    spec.distinct = false;
  } else if (name == "hard") {
    spec.kind = SamplerKind::HardDistinct;
  } else if (name == "mixed") {
    spec.kind = SamplerKind::Mixed;
  } else if (name == "greedy" || name == "greedy_top") {
    spec.kind = SamplerKind::GreedyTop;
  } else if (name == "model_iid") {
    spec.kind = SamplerKind::ModelIid;
  } else if (name == "marginal") {
    spec.kind = SamplerKind::Marginal;
  } else {
    throw ConfigError("unknown sampler: " + name);
  }
  mixed_hard_count(p, 0);
  return spec;
}

std::unique_ptr<NegativeSampler> make_sampler(const SamplerSpec& spec,
                                              const PopulationDistribution* population) {
  switch (spec.kind) {
    case SamplerKind::Uniform:
      return std::make_unique<UniformSampler>(spec.distinct, spec.exclude_gold, spec.pool);
    case SamplerKind::Marginal:
      if (population == nullptr) throw ConfigError("marginal sampler needs a population");
      return std::make_unique<MarginalSampler>(population->label_marginal(), spec.exclude_gold);
    case SamplerKind::ModelIid:
      return std::make_unique<ModelIidSampler>(spec.exclude_gold);
    case SamplerKind::HardDistinct:
      return std::make_unique<HardDistinctSampler>(spec.pool);
    case SamplerKind::GreedyTop:
      return std::make_unique<GreedyTopSampler>(spec.pool);
    case SamplerKind::Mixed:
      return std::make_unique<MixedSampler>(spec.hard_fraction, spec.pool);
    case SamplerKind::Fixed:
      break;
  }
  throw ConfigError("sampler kind cannot be built from a spec: " + to_string(spec.kind));
}

}  // namespace hnce
