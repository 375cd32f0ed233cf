#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hnce/bias.hpp"
#include "hnce/negatives.hpp"
#include "hnce/optimizer.hpp"
#include "hnce/population.hpp"
#include "hnce/scorer.hpp"

namespace hnce {

inline constexpr double kNotProbed = std::numeric_limits<double>::quiet_NaN();

struct TraceRecord {
  std::size_t step = 0;  // 1-based; counts optimizer updates
  std::size_t epoch = 0;
  double ce_exact = kNotProbed;  // before the update
  double nce_estimate = 0.0;     // contrastive loss on this step's batch, before the update
  double bias_norm_hard = kNotProbed;
  double bias_norm_random = kNotProbed;
  double bias_norm_mixed = kNotProbed;
  double wall_ms = 0.0;               // 0 unless wall-clock recording is enabled
  std::size_t snapshot_version = 0;   // epoch whose snapshot produced the negatives

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct ExperimentTrace {
  std::string sampler;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
};

inline constexpr const char* kTraceHeader =
    "step,epoch,ce_exact,nce_estimate,bias_norm_hard,bias_norm_random,bias_norm_mixed,wall_ms";

// "# seed=N" line, the fixed header, then one row per record. Values use
// round-trip precision; unprobed entries are written as "nan".
void write_trace_csv(std::ostream& out, const ExperimentTrace& trace);
void write_trace_csv(const std::string& path, const ExperimentTrace& trace);

// Negatives are drawn and the contrastive loss is traced under both
// objectives; the objective only picks the gradient.
enum class Objective {
  Nce,                  // hard_nce_empirical with the configured sampler
  SampledCrossEntropy,  // full softmax on the sampled batch
};

const char* to_string(Objective objective);
Objective parse_objective(const std::string& name);

struct ProbeConfig {
  std::size_t every = 10;  // 0 disables the bias probes
  std::size_t simulations = 10;
  CeReference reference = CeReference::SameBatch;
  bool fresh_batches = true;
  double mixed_fraction = 0.5;
};

struct TrainConfig {
  SamplerSpec sampler;
  std::size_t k = 5;  // candidates per example, gold included
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  // Fixed data: 0 means one pass over the examples. Population data: number
  // of fresh batches drawn per epoch (0 is read as 1).
  std::size_t steps_per_epoch = 0;
  OptimizerConfig optimizer;
  Objective objective = Objective::Nce;
  std::uint64_t seed = 0;
  ProbeConfig probe;
  bool track_exact_ce = true;  // needs a population
  bool record_wall_time = false;
  std::size_t threads = 1;

  void validate() const;
};

struct TrainingData {
  // Source of fresh samples when `examples` is empty; also the target of the
  // exact cross-entropy and the bias probes.
  const PopulationDistribution* population = nullptr;
  std::vector<std::pair<InputId, LabelId>> examples;
};

using ProgressFn = std::function<void(const TraceRecord&)>;

// Epoch loop: draw or shuffle the epoch's examples, snapshot the scorer,
// refresh every example's negatives against the snapshot, then take one
// optimizer step per batch. `sampler` overrides config.sampler when given.
ExperimentTrace train(Scorer& scorer, const TrainingData& data, const TrainConfig& config,
                      const NegativeSampler* sampler = nullptr, const ProgressFn& progress = {});

struct Figure1Config {
  SyntheticPopulationConfig population;  // 1000 labels, 32 inputs, peakiness 8
  MlpConfig mlp;                         // hidden 128, one-hot inputs
  std::size_t steps = 1500;
  std::size_t batch_size = 128;
  std::size_t k = 5;
  OptimizerConfig optimizer;
  Objective objective = Objective::Nce;
  ProbeConfig probe;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool record_wall_time = false;
};

struct Figure1Result {
  ExperimentTrace hard;
  ExperimentTrace random;
};

// Two runs that differ only in the training sampler.
Figure1Result run_figure1(const Figure1Config& config, const ProgressFn& progress = {});

// Mean of a field over the first or last quarter of the records where it
// was recorded.
enum class Quartile { First, Last };
double quartile_mean(const ExperimentTrace& trace, double TraceRecord::*field, Quartile which);

struct Figure1Summary {
  double random_nce = 0.0;   // last-quartile means
  double random_ce = 0.0;
  double hard_nce = 0.0;
  double hard_ce = 0.0;
  double hard_bias = 0.0;    // hard run, probed with the hard sampler
  double random_bias = 0.0;  // random run, probed with the random sampler
  double hard_bias_first_quartile = 0.0;
};

Figure1Summary summarize_figure1(const Figure1Result& result);

}  // namespace hnce
