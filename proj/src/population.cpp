#include "hnce/population.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"
#include "json.hpp"

namespace hnce {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_probability_vector(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError(std::string(what) + ": entries must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw ConfigError(std::string(what) + ": probabilities must sum to 1");
}

}  // namespace

LabelSpace::LabelSpace(std::size_t n) : size(n) {
  if (n < 2) throw ConfigError("label space needs at least 2 labels");
}

void SyntheticPopulationConfig::validate() const {
  if (label_count < 2) throw ConfigError("label_count must be at least 2");
  if (input_count < 1) throw ConfigError("input_count must be at least 1");
  if (!(peakiness > 0.0) || !std::isfinite(peakiness))
    throw ConfigError("peakiness must be positive");
}

PopulationDistribution::PopulationDistribution(std::vector<double> input_marginal,
                                               std::size_t label_count,
                                               std::vector<double> conditionals,
                                               std::optional<std::uint64_t> seed)
    : input_marginal_(std::move(input_marginal)),
      label_count_(label_count),
      conditionals_(std::move(conditionals)),
      seed_(seed) {
  LabelSpace{label_count_};
  if (input_marginal_.empty()) throw ConfigError("population needs at least one input");
  if (conditionals_.size() != input_marginal_.size() * label_count_)
    throw ConfigError("conditionals table has the wrong shape");
  check_probability_vector(input_marginal_, "input_marginal");
  for (InputId x = 0; x < input_count(); ++x) check_probability_vector(conditional(x), "conditional");
}

std::span<const double> PopulationDistribution::conditional(InputId x) const {
  return std::span<const double>(conditionals_).subspan(x * label_count_, label_count_);
}

double PopulationDistribution::probability(InputId x, LabelId y) const {
  return input_marginal_[x] * conditionals_[x * label_count_ + y];
}

std::vector<double> PopulationDistribution::label_marginal() const {
  std::vector<double> out(label_count_, 0.0);
  for (InputId x = 0; x < input_count(); ++x) {
    const auto row = conditional(x);
    for (LabelId y = 0; y < label_count_; ++y) out[y] += input_marginal_[x] * row[y];
  }
  return out;
}

std::pair<InputId, LabelId> PopulationDistribution::sample_pair(Rng& rng) const {
  const InputId x = sample_categorical(input_marginal_, rng);
  const LabelId y = sample_categorical(conditional(x), rng);
  return {x, y};
}

void PopulationDistribution::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format_version"] = kPopulationFormatVersion;
  j["label_count"] = label_count_;
  j["input_count"] = input_count();
  j["input_marginal"] = input_marginal_;
  nlohmann::json rows = nlohmann::json::array();
  for (InputId x = 0; x < input_count(); ++x) {
    const auto row = conditional(x);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["conditionals"] = std::move(rows);
  j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write population file: " + path.string());
  out << j.dump(1) << '\n';
}

PopulationDistribution PopulationDistribution::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != kPopulationFormatVersion)
      throw ConfigError("unsupported population format_version");
    const auto labels = j.at("label_count").get<std::size_t>();
    const auto inputs = j.at("input_count").get<std::size_t>();
    auto marginal = j.at("input_marginal").get<std::vector<double>>();
    std::vector<double> table;
    for (const auto& row : j.at("conditionals")) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != labels) throw ConfigError("conditional row has the wrong length");
      table.insert(table.end(), r.begin(), r.end());
    }
    if (marginal.size() != inputs) throw ConfigError("input_marginal has the wrong length");
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
    return PopulationDistribution(std::move(marginal), labels, std::move(table), seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed population file: ") + e.what());
  }
}

std::vector<double> synthetic_population_logits(const SyntheticPopulationConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<double> g(cfg.input_count * cfg.label_count);
  for (double& v : g) v = standard_normal(rng);
  return g;
}

PopulationDistribution build_synthetic_population(const SyntheticPopulationConfig& cfg) {
  std::vector<double> table = synthetic_population_logits(cfg);
  for (InputId x = 0; x < cfg.input_count; ++x) {
    std::span<double> row(table.data() + x * cfg.label_count, cfg.label_count);
    for (double& v : row) v *= cfg.peakiness;
    softmax_inplace(row);
  }
  std::vector<double> marginal(cfg.input_count, 1.0 / static_cast<double>(cfg.input_count));
  return PopulationDistribution(std::move(marginal), cfg.label_count, std::move(table), cfg.seed);
}

}  // namespace hnce
