#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hnce/random.hpp"
#include "hnce/types.hpp"

namespace hnce {

inline constexpr int kPopulationFormatVersion = 1;

struct LabelSpace {
  std::size_t size = 2;
  explicit LabelSpace(std::size_t n);
};

struct SyntheticPopulationConfig {
  std::size_t label_count = 1000;
  std::size_t input_count = 32;
  double peakiness = 8.0;  // temperature multiplying the Gaussian logits
  std::uint64_t seed = 0;

  void validate() const;
};

// Joint distribution pop(x, y) over a finite input space and label space,
// stored as an input marginal and a row-major table of conditionals pop(y|x).
// Immutable after construction.
class PopulationDistribution {
 public:
  PopulationDistribution(std::vector<double> input_marginal, std::size_t label_count,
                         std::vector<double> conditionals,
                         std::optional<std::uint64_t> seed = std::nullopt);

  std::size_t input_count() const { return input_marginal_.size(); }
  std::size_t label_count() const { return label_count_; }
  std::optional<std::uint64_t> seed() const { return seed_; }

  double input_probability(InputId x) const { return input_marginal_[x]; }
  std::span<const double> input_marginal() const { return input_marginal_; }
  std::span<const double> conditional(InputId x) const;
  double probability(InputId x, LabelId y) const;  // joint pop(x, y)

  // pop(y) = sum_x pop(x) pop(y|x)
  std::vector<double> label_marginal() const;

  std::pair<InputId, LabelId> sample_pair(Rng& rng) const;

  void save(const std::filesystem::path& path) const;
  static PopulationDistribution load(const std::filesystem::path& path);

  friend bool operator==(const PopulationDistribution&, const PopulationDistribution&) = default;

 private:
  std::vector<double> input_marginal_;
  std::size_t label_count_;
  std::vector<double> conditionals_;
  std::optional<std::uint64_t> seed_;
};

// Each row is softmax(peakiness * g) with g a vector of standard-normal draws;
// the input marginal is uniform. Deterministic in cfg.seed.
PopulationDistribution build_synthetic_population(const SyntheticPopulationConfig& cfg);

// The Gaussian draws used for row x, in the order build_synthetic_population
// consumes them. Exposed for oracle tests.
std::vector<double> synthetic_population_logits(const SyntheticPopulationConfig& cfg);

}  // namespace hnce
