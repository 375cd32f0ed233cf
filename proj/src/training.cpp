#include "hnce/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hnce/errors.hpp"
#include "hnce/losses.hpp"
#include "hnce/numerics.hpp"
#include "hnce/parallel.hpp"
#include "hnce/random.hpp"

namespace hnce {

namespace {

// Stream identifiers for derive_seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kNegativeStream = 2;
constexpr std::uint64_t kProbeStream = 3;

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe_batch(std::span<const Example> batch) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) os << " ";
    os << "(" << batch[i].input << "," << batch[i].candidates.gold << ")";
  }
  os << "]";
  return os.str();
}

}  // namespace

void write_trace_csv(std::ostream& out, const ExperimentTrace& trace) {
  out << "# seed=" << trace.seed << "\n" << kTraceHeader << "\n";
  for (const auto& r : trace.records) {
    out << r.step << ',' << r.epoch << ',' << format_value(r.ce_exact) << ','
        << format_value(r.nce_estimate) << ',' << format_value(r.bias_norm_hard) << ','
        << format_value(r.bias_norm_random) << ',' << format_value(r.bias_norm_mixed) << ','
        << format_value(r.wall_ms) << '\n';
  }
}

void write_trace_csv(const std::string& path, const ExperimentTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace: " + path);
  write_trace_csv(out, trace);
}

const char* to_string(Objective objective) {
  return objective == Objective::Nce ? "nce" : "sampled_ce";
}

Objective parse_objective(const std::string& name) {
  if (name == "nce") return Objective::Nce;
  if (name == "sampled_ce") return Objective::SampledCrossEntropy;
  throw ConfigError("unknown objective: " + name);
}

void TrainConfig::validate() const {
  if (k < 2) throw ConfigError("K must be at least 2");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
  optimizer.validate();
  if (probe.every > 0 && probe.simulations < 1) throw ConfigError("probe needs at least one simulation");
}

ExperimentTrace train(Scorer& scorer, const TrainingData& data, const TrainConfig& config,
                      const NegativeSampler* sampler, const ProgressFn& progress) {
  config.validate();
  const auto* pop = data.population;
  const bool fixed = !data.examples.empty();
  if (!fixed && pop == nullptr) throw ConfigError("train: need examples or a population");
  if (pop && (pop->input_count() != scorer.input_count() || pop->label_count() != scorer.label_count()))
    throw ConfigError("train: population and scorer sizes differ");
  if (config.probe.every > 0 && pop == nullptr) throw ConfigError("train: bias probes need a population");
  for (const auto& [x, y] : data.examples)
    if (x >= scorer.input_count() || y >= scorer.label_count())
      throw ConfigError("train: example out of range");

  std::unique_ptr<NegativeSampler> owned;
  if (sampler == nullptr) {
    owned = make_sampler(config.sampler, pop);
    sampler = owned.get();
  }
  if (config.k - 1 > scorer.label_count() - 1 && sampler->distinct())
    throw ConfigError("train: K exceeds the label count");

  std::unique_ptr<NegativeSampler> probe_hard, probe_random, probe_mixed;
  if (config.probe.every > 0) {
    probe_hard = std::make_unique<HardDistinctSampler>();
    probe_random = std::make_unique<UniformSampler>(true, true);
    probe_mixed = std::make_unique<MixedSampler>(config.probe.mixed_fraction);
  }

  ExperimentTrace trace;
  trace.sampler = sampler->name();
  trace.seed = config.seed;
  Optimizer optimizer(config.optimizer, scorer.parameter_count());
  const auto start_time = std::chrono::steady_clock::now();
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng data_rng(derive_seed(config.seed, kDataStream, epoch));
    std::vector<std::pair<InputId, LabelId>> pairs;
    std::size_t steps = 0;
    if (fixed) {
      pairs = data.examples;
      for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[uniform_index(data_rng, i)]);
      const std::size_t full = (pairs.size() + config.batch_size - 1) / config.batch_size;
      steps = config.steps_per_epoch == 0 ? full : std::min(full, config.steps_per_epoch);
    } else {
      steps = std::max<std::size_t>(1, config.steps_per_epoch);
      pairs.reserve(steps * config.batch_size);
      for (std::size_t i = 0; i < steps * config.batch_size; ++i) pairs.push_back(pop->sample_pair(data_rng));
    }

    // Negatives for the whole epoch come from one snapshot of the scorer.
    std::vector<std::vector<LabelId>> negatives(pairs.size());
    {
      std::map<InputId, std::size_t> slot;
      std::vector<InputId> distinct_inputs;
      if (sampler->needs_scores())
        for (const auto& [x, y] : pairs)
          if (slot.emplace(x, distinct_inputs.size()).second) distinct_inputs.push_back(x);
      const auto snapshot = scorer.clone();
      std::vector<std::vector<double>> scores(distinct_inputs.size());
      parallel_for(distinct_inputs.size(), config.threads,
                   [&](std::size_t i) { scores[i] = snapshot->score_all(distinct_inputs[i]); });
      const std::size_t used = std::min(pairs.size(), steps * config.batch_size);
      parallel_for(used, config.threads, [&](std::size_t i) {
        const auto [x, y] = pairs[i];
        Rng rng(derive_seed(config.seed, kNegativeStream, epoch, i));
        std::span<const double> s;
        if (sampler->needs_scores()) s = scores[slot.at(x)];
        SampleContext ctx{x, y, scorer.label_count(), s};
        negatives[i] = sampler->sample(ctx, config.k - 1, rng);
      });
    }

    for (std::size_t b = 0; b < steps; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(pairs.size(), lo + config.batch_size);
      const std::span<const std::pair<InputId, LabelId>> batch_pairs(pairs.data() + lo, hi - lo);
      std::vector<Example> batch;
      batch.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) batch.push_back({pairs[i].first, {pairs[i].second, negatives[i]}});

      TraceRecord rec;
      rec.step = ++step;
      rec.epoch = epoch;
      rec.snapshot_version = epoch;
      if (pop && config.track_exact_ce) rec.ce_exact = cross_entropy_exact(scorer, *pop, Gradient::Skip).value;

      LossValue loss;
      try {
        if (config.objective == Objective::Nce) {
          loss = hard_nce_empirical(scorer, batch, Gradient::Compute);
          rec.nce_estimate = loss.value;
        } else {
          rec.nce_estimate = hard_nce_empirical(scorer, batch, Gradient::Skip).value;
          loss = cross_entropy_batch(scorer, batch_pairs, Gradient::Compute);
        }
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at step " + std::to_string(rec.step) +
                             ", batch " + describe_batch(batch));
      }

      if (config.probe.every > 0 && (rec.step - 1) % config.probe.every == 0) {
        MonteCarloOptions mc;
        mc.simulations = config.probe.simulations;
        mc.reference = config.probe.reference;
        mc.threads = config.threads;
        mc.fresh_batches = config.probe.fresh_batches;
        mc.seed = derive_seed(config.seed, kProbeStream, rec.step, 0);
        rec.bias_norm_hard = bias_monte_carlo(scorer, *pop, batch_pairs, *probe_hard, config.k, mc).norm;
        mc.seed = derive_seed(config.seed, kProbeStream, rec.step, 1);
        rec.bias_norm_random = bias_monte_carlo(scorer, *pop, batch_pairs, *probe_random, config.k, mc).norm;
        mc.seed = derive_seed(config.seed, kProbeStream, rec.step, 2);
        rec.bias_norm_mixed = bias_monte_carlo(scorer, *pop, batch_pairs, *probe_mixed, config.k, mc).norm;
      }

      optimizer.step(scorer.parameters(), loss.gradient);
      if (!all_finite(scorer.parameters()))
        throw NumericalError("non-finite parameters after step " + std::to_string(rec.step));
      if (config.record_wall_time)
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time).count();
      trace.records.push_back(rec);
      if (progress) progress(rec);
    }
  }
  return trace;
}

Figure1Result run_figure1(const Figure1Config& config, const ProgressFn& progress) {
  const auto pop = build_synthetic_population(config.population);
  TrainingData data{&pop, {}};
  TrainConfig tc;
  tc.k = config.k;
  tc.batch_size = config.batch_size;
  tc.epochs = config.steps;
  tc.steps_per_epoch = 1;
  tc.optimizer = config.optimizer;
  tc.objective = config.objective;
  tc.seed = config.seed;
  tc.probe = config.probe;
  tc.threads = config.threads;
  tc.record_wall_time = config.record_wall_time;

  Figure1Result result;
  {
    MlpScorer scorer(pop.input_count(), pop.label_count(), config.mlp);
    tc.sampler = SamplerSpec::parse("hard");
    result.hard = train(scorer, data, tc, nullptr, progress);
  }
  {
    MlpScorer scorer(pop.input_count(), pop.label_count(), config.mlp);
    tc.sampler = SamplerSpec::parse("random");
    result.random = train(scorer, data, tc, nullptr, progress);
  }
  return result;
}

double quartile_mean(const ExperimentTrace& trace, double TraceRecord::*field, Quartile which) {
  std::vector<double> values;
  for (const auto& r : trace.records)
    if (!std::isnan(r.*field)) values.push_back(r.*field);
  if (values.empty()) return kNotProbed;
  const std::size_t n = std::max<std::size_t>(1, values.size() / 4);
  const auto first = which == Quartile::First ? values.begin() : values.end() - static_cast<std::ptrdiff_t>(n);
  double sum = 0.0;
  for (auto it = first; it != first + static_cast<std::ptrdiff_t>(n); ++it) sum += *it;
  return sum / static_cast<double>(n);
}

Figure1Summary summarize_figure1(const Figure1Result& result) {
  Figure1Summary s;
  s.random_nce = quartile_mean(result.random, &TraceRecord::nce_estimate, Quartile::Last);
  s.random_ce = quartile_mean(result.random, &TraceRecord::ce_exact, Quartile::Last);
  s.hard_nce = quartile_mean(result.hard, &TraceRecord::nce_estimate, Quartile::Last);
  s.hard_ce = quartile_mean(result.hard, &TraceRecord::ce_exact, Quartile::Last);
  s.hard_bias = quartile_mean(result.hard, &TraceRecord::bias_norm_hard, Quartile::Last);
  s.random_bias = quartile_mean(result.random, &TraceRecord::bias_norm_random, Quartile::Last);
  s.hard_bias_first_quartile = quartile_mean(result.hard, &TraceRecord::bias_norm_hard, Quartile::First);
  return s;
}

}  // namespace hnce
