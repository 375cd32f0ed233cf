#include "hnce/bias.hpp"

#include <cmath>
#include <map>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"
#include "hnce/parallel.hpp"

namespace hnce {

const char* to_string(BiasMethod method) {
  switch (method) {
    case BiasMethod::ExactEnumeration: return "exact_enumeration";
    case BiasMethod::Theorem1Formula: return "theorem1_formula";
    case BiasMethod::MonteCarlo: return "monte_carlo";
  }
  return "?";
}

std::vector<double> gamma_exact(const Scorer& scorer, const PopulationDistribution& pop,
                                const NegativeSampler& sampler, InputId x, std::size_t k,
                                const EnumerationLimits& limits) {
  if (k < 1) throw ConfigError("gamma_exact: K must be at least 1");
  check_enumeration_limits(pop.label_count(), k, limits);
  const auto scores = scorer.score_all(x);
  const auto row = pop.conditional(x);
  std::vector<double> gamma(pop.label_count(), 0.0);
  std::vector<double> cand(k);
  for (LabelId gold = 0; gold < row.size(); ++gold) {
    if (row[gold] == 0.0) continue;
    SampleContext ctx{x, gold, pop.label_count(), scores};
    for_each_tuple(sampler, ctx, k - 1, [&](std::span<const LabelId> negatives, double prob) {
      cand[0] = scores[gold];
      for (std::size_t i = 0; i < negatives.size(); ++i) cand[i + 1] = scores[negatives[i]];
      const double lse = log_sum_exp(cand);
      const double w = row[gold] * prob;
      gamma[gold] += w * std::exp(cand[0] - lse);
      for (std::size_t i = 0; i < negatives.size(); ++i)
        gamma[negatives[i]] += w * std::exp(cand[i + 1] - lse);
    });
  }
  return gamma;
}

HeuristicGamma gamma_heuristic(const Scorer& scorer, InputId x) {
  const auto scores = scorer.score_all(x);
  const double log_z = log_sum_exp(scores);
  // log N = log sum_y exp(2 s_y - log Z)
  std::vector<double> terms(scores.size());
  for (std::size_t y = 0; y < scores.size(); ++y) terms[y] = 2.0 * scores[y] - log_z;
  const double log_n = log_sum_exp(terms);
  HeuristicGamma out;
  out.gamma.resize(scores.size());
  out.delta.resize(scores.size());
  for (std::size_t y = 0; y < scores.size(); ++y) {
    out.gamma[y] = std::exp(terms[y] - log_n);
    out.delta[y] = std::exp(scores[y] - log_n);
  }
  return out;
}

BiasReport bias_theorem1(const Scorer& scorer, const PopulationDistribution& pop,
                         const NegativeSampler& sampler, std::size_t k,
                         const EnumerationLimits& limits) {
  BiasReport report;
  report.method = BiasMethod::Theorem1Formula;
  report.bias.assign(scorer.parameter_count(), 0.0);
  report.epsilon.assign(pop.input_count() * pop.label_count(), 0.0);
  std::vector<double> weights(pop.label_count());
  for (InputId x = 0; x < pop.input_count(); ++x) {
    const double px = pop.input_probability(x);
    const auto p = model_distribution(scorer, x);
    const auto gamma = gamma_exact(scorer, pop, sampler, x, k, limits);
    for (LabelId y = 0; y < pop.label_count(); ++y) {
      const double eps = p[y] - gamma[y];
      report.epsilon[x * pop.label_count() + y] = eps;
      weights[y] = px * eps;
    }
    if (px != 0.0) scorer.accumulate_gradient_dense(x, weights, report.bias);
  }
  report.norm = l2_norm(report.bias);
  return report;
}

BiasReport bias_direct(const Scorer& scorer, const PopulationDistribution& pop,
                       const NegativeSampler& sampler, std::size_t k,
                       const EnumerationLimits& limits) {
  const auto ce = cross_entropy_exact(scorer, pop, Gradient::Compute);
  const auto hard = hard_nce_expected(scorer, pop, sampler, k, Gradient::Compute, limits);
  BiasReport report;
  report.method = BiasMethod::ExactEnumeration;
  report.bias = ce.gradient;
  axpy(-1.0, hard.gradient, report.bias);
  report.norm = l2_norm(report.bias);
  report.ce_loss = ce.value;
  report.nce_loss = hard.value;
  return report;
}

BiasReport bias_monte_carlo(const Scorer& scorer, const PopulationDistribution& pop,
                            std::span<const std::pair<InputId, LabelId>> batch,
                            const NegativeSampler& sampler, std::size_t k,
                            const MonteCarloOptions& options) {
  if (options.simulations < 1) throw ConfigError("bias_monte_carlo: at least one simulation");
  if (batch.empty()) throw ConfigError("bias_monte_carlo: empty batch");
  if (k < 2) throw ConfigError("bias_monte_carlo: K must be at least 2");
  const std::size_t dim = scorer.parameter_count();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  // Scores are only needed once per distinct input.
  std::map<InputId, std::vector<double>> scores;
  if (options.fresh_batches) {
    if (pop.input_count() * pop.label_count() > kMaxExactTableEntries)
      throw LimitError("bias_monte_carlo: population too large for fresh batches");
    for (InputId x = 0; x < pop.input_count(); ++x) scores.emplace(x, scorer.score_all(x));
  } else {
    for (const auto& [x, y] : batch)
      if (!scores.contains(x)) scores.emplace(x, scorer.score_all(x));
  }

  // Cross-entropy gradient of a sampled batch, returned with its loss.
  auto batch_ce = [&](std::span<const std::pair<InputId, LabelId>> pairs, std::vector<double>& grad) {
    grad.assign(dim, 0.0);
    std::map<InputId, std::vector<double>> weights;
    double loss = 0.0;
    for (const auto& [x, y] : pairs) {
      auto& w = weights[x];
      const auto& s = scores.at(x);
      if (w.empty()) w.assign(s.size(), 0.0);
      const double lse = log_sum_exp(s);
      for (std::size_t j = 0; j < s.size(); ++j) w[j] += inv_n * std::exp(s[j] - lse);
      w[y] -= inv_n;
      loss += inv_n * (lse - s[y]);
    }
    for (const auto& [x, w] : weights) scorer.accumulate_gradient_dense(x, w, grad);
    return loss;
  };

  BiasReport report;
  report.method = BiasMethod::MonteCarlo;
  report.simulations = options.simulations;
  std::vector<double> reference;
  if (options.reference == CeReference::Exact) {
    auto ce = cross_entropy_exact(scorer, pop, Gradient::Compute);
    reference = std::move(ce.gradient);
    report.ce_loss = ce.value;
  } else if (!options.fresh_batches) {
    report.ce_loss = batch_ce(batch, reference);
  }

  auto simulate = [&](std::size_t s, std::vector<double>& bias_out) -> std::pair<double, double> {
    Rng rng(derive_seed(options.seed, s));
    std::vector<std::pair<InputId, LabelId>> drawn;
    auto pairs = batch;
    if (options.fresh_batches) {
      drawn.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) drawn.push_back(pop.sample_pair(rng));
      pairs = drawn;
    }
    std::vector<Example> examples;
    examples.reserve(pairs.size());
    for (const auto& [x, y] : pairs) {
      SampleContext ctx{x, y, scorer.label_count(), scores.at(x)};
      examples.push_back({x, {y, sampler.sample(ctx, k - 1, rng)}});
    }
    auto loss = hard_nce_empirical(scorer, examples, Gradient::Compute);
    double ce = 0.0;
    if (options.fresh_batches && options.reference == CeReference::SameBatch) {
      ce = batch_ce(pairs, bias_out);
    } else {
      bias_out = reference;
    }
    axpy(-1.0, loss.gradient, bias_out);
    return {loss.value, ce};
  };

  // Simulations run in blocks; each block is reduced in index order.
  const std::size_t block = std::max<std::size_t>(1, options.threads) * 4;
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  report.simulation_norms.resize(options.simulations);
  std::vector<std::vector<double>> slots(block);
  std::vector<std::pair<double, double>> losses(block);
  std::size_t seen = 0;
  for (std::size_t start = 0; start < options.simulations; start += block) {
    const std::size_t count = std::min(block, options.simulations - start);
    parallel_for(count, options.threads,
                 [&](std::size_t i) { losses[i] = simulate(start + i, slots[i]); });
    for (std::size_t i = 0; i < count; ++i) {
      const auto& b = slots[i];
      report.simulation_norms[start + i] = l2_norm(b);
      report.nce_loss += losses[i].first / static_cast<double>(options.simulations);
      if (options.fresh_batches && options.reference == CeReference::SameBatch)
        report.ce_loss += losses[i].second / static_cast<double>(options.simulations);
      ++seen;
      for (std::size_t j = 0; j < dim; ++j) {
        const double delta = b[j] - mean[j];
        mean[j] += delta / static_cast<double>(seen);
        m2[j] += delta * (b[j] - mean[j]);
      }
    }
  }
  report.bias = std::move(mean);
  report.norm = l2_norm(report.bias);
  if (options.simulations > 1) {
    report.standard_error.resize(dim);
    const double s = static_cast<double>(options.simulations);
    for (std::size_t j = 0; j < dim; ++j) report.standard_error[j] = std::sqrt(m2[j] / (s - 1.0) / s);
  }
  return report;
}

}  // namespace hnce
