#include "hnce/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hnce/errors.hpp"
#include "hnce/losses.hpp"
#include "hnce/negatives.hpp"
#include "hnce/random.hpp"

namespace hnce {

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kProbeStream = 2;

std::size_t overlap(const Sequence& mention, const Sequence& entity) {
  const std::set<int> tokens(mention.begin(), mention.end());
  std::size_t n = 0;
  for (int t : entity) n += tokens.count(t);
  return n;
}

double norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void OrderingConfig::validate() const {
  if (mentions < 1) throw ConfigError("ordering needs at least one mention");
  if (k < 2 || k > labels) throw ConfigError("ordering K must lie in [2, labels]");
  if (!(mixed_fraction >= 0.0 && mixed_fraction <= 1.0)) throw ConfigError("mixed fraction must lie in [0, 1]");
  if (simulations < 2) throw ConfigError("ordering needs at least two simulations");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (check_every < 1 || max_epochs < check_every) throw ConfigError("need 1 <= check_every <= max_epochs");
  optimizer.validate();
}

OrderingSlice confusable_slice(const ToyCorpus& corpus, std::size_t mentions, std::size_t labels) {
  corpus.validate();
  if (corpus.validation_ids.size() < mentions)
    throw ConfigError("corpus has fewer validation mentions than the ordering slice needs");
  if (labels > corpus.entities.size()) throw ConfigError("ordering slice needs more labels than the corpus has");
  OrderingSlice slice;
  slice.mention_ids.assign(corpus.validation_ids.begin(), corpus.validation_ids.begin() + mentions);
  std::vector<bool> used(corpus.entities.size(), false);
  for (auto m : slice.mention_ids) {
    const LabelId g = corpus.golds[m];
    if (!used[g]) {
      used[g] = true;
      slice.entity_ids.push_back(g);
    }
  }
  if (slice.entity_ids.size() > labels) throw ConfigError("ordering slice has more golds than labels");
  for (std::size_t j = 0; slice.entity_ids.size() < labels; ++j) {
    const auto& mention = corpus.mentions[slice.mention_ids[j % mentions]];
    LabelId best = 0;
    std::size_t best_overlap = 0;
    bool found = false;
    for (LabelId y = 0; y < corpus.entities.size(); ++y) {
      if (used[y]) continue;
      const std::size_t o = overlap(mention, corpus.entities[y]);
      if (!found || o > best_overlap) {
        best = y;
        best_overlap = o;
        found = true;
      }
    }
    used[best] = true;
    slice.entity_ids.push_back(best);
  }
  return slice;
}

OrderingReport run_bias_ordering(const ToyCorpus& corpus, const OrderingConfig& config) {
  config.validate();
  OrderingReport report;
  report.slice = confusable_slice(corpus, config.mentions, config.labels);
  const auto& slice = report.slice;

  const auto views = views_of(corpus);
  EncoderConfig ec;
  ec.vocab_size = corpus.vocab_size;
  ec.hidden = config.hidden;
  ec.score = instantiate_named(config.arch);
  ec.init_scale = config.init_scale;
  ec.seed = config.seed;
  EncoderScorer full(views.mentions, views.entities, ec);

  // The slice scorer shares the parameter layout, which does not depend on
  // the sequences it scores.
  auto inputs = std::make_shared<std::vector<Sequence>>();
  for (auto m : slice.mention_ids) inputs->push_back(corpus.mentions[m]);
  auto labels = std::make_shared<std::vector<Sequence>>();
  for (auto y : slice.entity_ids) labels->push_back(corpus.entities[y]);
  EncoderScorer sub(inputs, labels, ec);

  const std::size_t X = slice.mention_ids.size();
  const std::size_t Y = slice.entity_ids.size();
  std::vector<double> rows(X * Y, 0.0);
  std::vector<std::pair<InputId, LabelId>> batch;
  for (std::size_t i = 0; i < X; ++i) {
    const auto g = static_cast<LabelId>(
        std::find(slice.entity_ids.begin(), slice.entity_ids.end(), corpus.golds[slice.mention_ids[i]]) -
        slice.entity_ids.begin());
    rows[i * Y + g] = 1.0;
    batch.emplace_back(static_cast<InputId>(i), g);
  }
  const PopulationDistribution pop(std::vector<double>(X, 1.0 / static_cast<double>(X)), Y, rows);

  auto pairs = training_pairs(corpus);
  Optimizer optimizer(config.optimizer, full.parameter_count());
  std::vector<double> best_params;
  double best_ce = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, kShuffleStream, epoch));
    for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[uniform_index(rng, i)]);
    for (std::size_t i = 0; i < pairs.size(); i += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, pairs.size() - i);
      const auto loss = cross_entropy_batch(full, std::span(pairs).subspan(i, n));
      optimizer.step(full.parameters(), loss.gradient);
    }
    if (epoch % config.check_every != 0) continue;
    std::copy(full.parameters().begin(), full.parameters().end(), sub.parameters().begin());
    const double ce = cross_entropy_exact(sub, pop, Gradient::Skip).value;
    if (ce < best_ce) {
      best_ce = ce;
      best_params.assign(full.parameters().begin(), full.parameters().end());
      report.selected_epoch = epoch;
    }
  }
  if (best_params.empty()) throw NumericalError("no finite cross-entropy checkpoint");
  std::copy(best_params.begin(), best_params.end(), sub.parameters().begin());
  report.cross_entropy = best_ce;

  std::size_t correct = 0;
  for (const auto& [x, g] : batch) {
    const auto s = sub.score_all(x);
    correct += static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin()) == g;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(X);

  MonteCarloOptions mc;
  mc.simulations = config.simulations;
  mc.seed = derive_seed(config.seed, kProbeStream);
  mc.reference = CeReference::Exact;
  mc.threads = config.threads;
  const HardDistinctSampler hard;
  const MixedSampler mixed(config.mixed_fraction);
  const UniformSampler random(true, true);
  for (const NegativeSampler* sampler : {static_cast<const NegativeSampler*>(&hard),
                                         static_cast<const NegativeSampler*>(&mixed),
                                         static_cast<const NegativeSampler*>(&random)}) {
    const auto b = bias_monte_carlo(sub, pop, batch, *sampler, config.k, mc);
    report.entries.push_back({sampler->name(), b.norm, norm_of(b.standard_error)});
  }
  return report;
}

}  // namespace hnce
