#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hnce {

enum class OptimizerKind { Sgd, Adam };

const char* to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, std::size_t dimension);

  // theta -= update(gradient). Throws NumericalError on a non-finite gradient
  // entry, before touching theta or the moments.
  void step(std::span<double> theta, std::span<const double> gradient);

  const OptimizerConfig& config() const { return config_; }
  std::size_t step_count() const { return steps_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace hnce
