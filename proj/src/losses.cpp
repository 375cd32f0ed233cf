#include "hnce/losses.hpp"

#include <cmath>
#include <sstream>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"

namespace hnce {

namespace {

void require_k(std::size_t k) {
  if (k < 2) throw ConfigError("contrastive losses need K >= 2 candidates");
}

// -log softmax(scores)[0] and the softmax itself.
double discriminator_loss(std::span<const double> scores, std::vector<double>& pi) {
  pi.assign(scores.begin(), scores.end());
  const double lse = log_sum_exp(scores);
  for (double& v : pi) v = std::exp(v - lse);
  return lse - scores[0];
}

void check_finite_loss(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericalError(std::string(what) + ": non-finite loss");
}

}  // namespace

std::vector<LabelId> CandidateTuple::labels() const {
  std::vector<LabelId> out;
  out.reserve(size());
  out.push_back(gold);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

void check_enumeration_limits(std::size_t label_count, std::size_t k, const EnumerationLimits& limits) {
  if (label_count > limits.max_labels || k > limits.max_candidates) {
    std::ostringstream msg;
    msg << "enumeration limit exceeded: |Y|=" << label_count << " (max " << limits.max_labels
        << "), K=" << k << " (max " << limits.max_candidates << ")";
    throw LimitError(msg.str());
  }
}

std::vector<double> nce_discriminator(const Scorer& scorer, InputId x, const CandidateTuple& tuple) {
  require_k(tuple.size());
  const auto labels = tuple.labels();
  auto scores = scorer.score_candidates(x, labels);
  softmax_inplace(scores);
  return scores;
}

LossValue cross_entropy_exact(const Scorer& scorer, const PopulationDistribution& pop,
                              Gradient mode, std::size_t max_entries) {
  if (pop.input_count() * pop.label_count() > max_entries)
    throw LimitError("enumeration limit exceeded: |X||Y| is too large for exact cross-entropy");
  if (scorer.label_count() != pop.label_count() || scorer.input_count() < pop.input_count())
    throw ConfigError("scorer and population disagree on the label or input space");
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  std::vector<double> scores(pop.label_count());
  std::vector<double> weights(pop.label_count());
  for (InputId x = 0; x < pop.input_count(); ++x) {
    const double px = pop.input_probability(x);
    if (px == 0.0) continue;
    scorer.score_all(x, scores);
    const double lse = log_sum_exp(scores);
    const auto row = pop.conditional(x);
    double term = 0.0;
    for (LabelId y = 0; y < row.size(); ++y)
      if (row[y] > 0.0) term += row[y] * (lse - scores[y]);
    out.value += px * term;
    if (mode == Gradient::Compute) {
      for (LabelId y = 0; y < row.size(); ++y) weights[y] = px * (std::exp(scores[y] - lse) - row[y]);
      scorer.accumulate_gradient_dense(x, weights, out.gradient);
    }
  }
  check_finite_loss(out.value, "cross_entropy_exact");
  return out;
}

LossValue cross_entropy_batch(const Scorer& scorer, std::span<const std::pair<InputId, LabelId>> batch,
                              Gradient mode) {
  if (batch.empty()) throw ConfigError("cross_entropy_batch: empty batch");
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> scores(scorer.label_count());
  for (const auto& [x, y] : batch) {
    scorer.score_all(x, scores);
    const double lse = log_sum_exp(scores);
    out.value += scale * (lse - scores[y]);
    if (mode == Gradient::Compute) {
      for (double& v : scores) v = scale * std::exp(v - lse);
      scores[y] -= scale;
      scorer.accumulate_gradient_dense(x, scores, out.gradient);
    }
  }
  check_finite_loss(out.value, "cross_entropy_batch");
  return out;
}

LossValue hard_nce_empirical(const Scorer& scorer, std::span<const Example> batch, Gradient mode) {
  if (batch.empty()) throw ConfigError("hard_nce_empirical: empty batch");
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> pi;
  for (const auto& ex : batch) {
    require_k(ex.candidates.size());
    const auto labels = ex.candidates.labels();
    const auto scores = scorer.score_candidates(ex.input, labels);
    out.value += scale * discriminator_loss(scores, pi);
    if (mode == Gradient::Compute) {
      for (double& v : pi) v *= scale;
      pi[0] -= scale;
      scorer.accumulate_gradient(ex.input, labels, pi, out.gradient);
    }
  }
  check_finite_loss(out.value, "hard_nce_empirical");
  return out;
}

LossValue hard_nce_expected(const Scorer& scorer, const PopulationDistribution& pop,
                            const NegativeSampler& sampler, std::size_t k, Gradient mode,
                            const EnumerationLimits& limits) {
  require_k(k);
  check_enumeration_limits(pop.label_count(), k, limits);
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  std::vector<LabelId> labels(k);
  std::vector<double> cand_scores(k);
  std::vector<double> pi;
  for (InputId x = 0; x < pop.input_count(); ++x) {
    const double px = pop.input_probability(x);
    if (px == 0.0) continue;
    const auto scores = scorer.score_all(x);
    const auto row = pop.conditional(x);
    for (LabelId gold = 0; gold < row.size(); ++gold) {
      if (row[gold] == 0.0) continue;
      const double weight = px * row[gold];
      SampleContext ctx{x, gold, pop.label_count(), scores};
      for_each_tuple(sampler, ctx, k - 1, [&](std::span<const LabelId> negatives, double prob) {
        labels[0] = gold;
        std::copy(negatives.begin(), negatives.end(), labels.begin() + 1);
        for (std::size_t i = 0; i < k; ++i) cand_scores[i] = scores[labels[i]];
        const double w = weight * prob;
        out.value += w * discriminator_loss(cand_scores, pi);
        if (mode == Gradient::Compute) {
          for (double& v : pi) v *= w;
          pi[0] -= w;
          scorer.accumulate_gradient(x, labels, pi, out.gradient);
        }
      });
    }
  }
  check_finite_loss(out.value, "hard_nce_expected");
  return out;
}

LossValue prior_corrected_loss(const Scorer& scorer, std::span<const Example> batch,
                               std::span<const std::vector<double>> proposals, Gradient mode) {
  if (batch.empty()) throw ConfigError("prior_corrected_loss: empty batch");
  if (proposals.size() != batch.size())
    throw ConfigError("prior_corrected_loss: one proposal vector per example is required");
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> pi;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    const std::size_t k = ex.candidates.size();
    require_k(k);
    if (proposals[i].size() != k - 1)
      throw ConfigError("prior_corrected_loss: proposal vector length must be K - 1");
    const auto labels = ex.candidates.labels();
    auto scores = scorer.score_candidates(ex.input, labels);
    const double negatives = static_cast<double>(k - 1);
    for (std::size_t j = 1; j < k; ++j) {
      if (labels[j] == ex.candidates.gold) {
        ++out.gold_duplicates;
        continue;
      }
      const double nu = proposals[i][j - 1];
      if (!(nu > 0.0)) throw ConfigError("prior_corrected_loss: proposal probability must be positive");
      scores[j] -= std::log(negatives * nu);
    }
    out.value += scale * discriminator_loss(scores, pi);
    if (mode == Gradient::Compute) {
      // The correction does not depend on theta.
      for (double& v : pi) v *= scale;
      pi[0] -= scale;
      scorer.accumulate_gradient(ex.input, labels, pi, out.gradient);
    }
  }
  check_finite_loss(out.value, "prior_corrected_loss");
  return out;
}

LossValue prior_corrected_expected(const Scorer& scorer, const PopulationDistribution& pop,
                                   const NegativeSampler& proposal, std::size_t k, Gradient mode,
                                   const EnumerationLimits& limits) {
  require_k(k);
  if (!proposal.iid())
    throw ConfigError("prior-corrected loss requires iid negatives; '" + proposal.name() +
                      "' is correlated");
  check_enumeration_limits(pop.label_count(), k, limits);
  LossValue out;
  if (mode == Gradient::Compute) out.gradient.assign(scorer.parameter_count(), 0.0);
  for (InputId x = 0; x < pop.input_count(); ++x) {
    const double px = pop.input_probability(x);
    if (px == 0.0) continue;
    const auto scores = scorer.score_all(x);
    const auto row = pop.conditional(x);
    for (LabelId gold = 0; gold < row.size(); ++gold) {
      if (row[gold] == 0.0) continue;
      SampleContext ctx{x, gold, pop.label_count(), scores};
      const auto nu = proposal.proposal(ctx);
      for_each_tuple(proposal, ctx, k - 1, [&](std::span<const LabelId> negatives, double prob) {
        Example ex{x, {gold, std::vector<LabelId>(negatives.begin(), negatives.end())}};
        std::vector<double> q;
        q.reserve(negatives.size());
        for (LabelId y : negatives) q.push_back(nu[y]);
        const std::vector<std::vector<double>> qs{std::move(q)};
        const auto term = prior_corrected_loss(scorer, std::span<const Example>(&ex, 1), qs, mode);
        const double w = px * row[gold] * prob;
        out.value += w * term.value;
        out.gold_duplicates += term.gold_duplicates;
        if (mode == Gradient::Compute) axpy(w, term.gradient, out.gradient);
      });
    }
  }
  return out;
}

double adversarial_loss(const Scorer& scorer, const PopulationDistribution& pop,
                        const NegativeSampler& h, std::size_t k, const EnumerationLimits& limits) {
  return hard_nce_expected(scorer, pop, h, k, Gradient::Skip, limits).value;
}

}  // namespace hnce
