#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hnce/losses.hpp"
#include "hnce/negatives.hpp"
#include "hnce/population.hpp"
#include "hnce/scorer.hpp"

namespace hnce {

enum class BiasMethod { ExactEnumeration, Theorem1Formula, MonteCarlo };

const char* to_string(BiasMethod method);

// Gradient bias b(theta) = grad J_CE - grad J_HARD.
struct BiasReport {
  std::vector<double> bias;
  double norm = 0.0;  // Euclidean norm over every parameter
  BiasMethod method = BiasMethod::ExactEnumeration;
  std::size_t simulations = 0;
  std::vector<double> simulation_norms;  // Monte Carlo only, one per simulation
  std::vector<double> standard_error;    // Monte Carlo with S > 1, per coordinate
  std::vector<double> epsilon;           // |X| x |Y| table of p - gamma (formula only)
  double ce_loss = 0.0;
  double nce_loss = 0.0;  // mean contrastive loss over the simulations (Monte Carlo)
};

// gamma(y|x): probability that y is a candidate and is then picked by the
// discriminator, by full enumeration of y_1 ~ pop(.|x), negatives ~ h and
// k ~ pi. K = 1 is allowed and gives gamma = pop(.|x).
std::vector<double> gamma_exact(const Scorer& scorer, const PopulationDistribution& pop,
                                const NegativeSampler& sampler, InputId x, std::size_t k,
                                const EnumerationLimits& limits = {});

struct HeuristicGamma {
  std::vector<double> gamma;  // p(y|x) exp(s(x,y)) / N(x)
  std::vector<double> delta;  // exp(s(x,y)) / N(x)
};

// Closed-form approximation with N(x) = sum_y p(y|x) exp(s(x,y)), in log domain.
HeuristicGamma gamma_heuristic(const Scorer& scorer, InputId x);

// b_i = E_x[ sum_y (p(y|x) - gamma(y|x)) d s(x,y) / d theta_i ].
BiasReport bias_theorem1(const Scorer& scorer, const PopulationDistribution& pop,
                         const NegativeSampler& sampler, std::size_t k,
                         const EnumerationLimits& limits = {});

// grad J_CE - grad J_HARD, each computed by its own exact enumeration.
BiasReport bias_direct(const Scorer& scorer, const PopulationDistribution& pop,
                       const NegativeSampler& sampler, std::size_t k,
                       const EnumerationLimits& limits = {});

enum class CeReference {
  Exact,      // exact grad J_CE over the whole population
  SameBatch,  // empirical cross-entropy gradient on the same data batch
};

struct MonteCarloOptions {
  std::size_t simulations = 10;
  std::uint64_t seed = 0;
  CeReference reference = CeReference::Exact;
  std::size_t threads = 1;
  // Each simulation draws its own data batch of the same size from the
  // population instead of reusing the given one.
  bool fresh_batches = false;
};

// Averages `simulations` independent draws of the empirical contrastive
// gradient and subtracts them from the reference cross-entropy gradient. Simulation s draws its negatives from the stream
// derive_seed(seed, s), so results do not depend on the thread count.
BiasReport bias_monte_carlo(const Scorer& scorer, const PopulationDistribution& pop,
                            std::span<const std::pair<InputId, LabelId>> batch,
                            const NegativeSampler& sampler, std::size_t k,
                            const MonteCarloOptions& options);

}  // namespace hnce
