#include "hnce/optimizer.hpp"

#include <cmath>
#include <string>

#include "hnce/errors.hpp"

namespace hnce {

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer: " + name);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

Optimizer::Optimizer(const OptimizerConfig& config, std::size_t dimension) : config_(config) {
  config_.validate();
  if (config_.kind == OptimizerKind::Adam) {
    m_.assign(dimension, 0.0);
    v_.assign(dimension, 0.0);
  }
}

void Optimizer::step(std::span<double> theta, std::span<const double> gradient) {
  if (theta.size() != gradient.size())
    throw ConfigError("optimizer: gradient has " + std::to_string(gradient.size()) +
                      " entries, parameters have " + std::to_string(theta.size()));
  if (config_.kind == OptimizerKind::Adam && theta.size() != m_.size())
    throw ConfigError("optimizer: parameter dimension changed");
  for (std::size_t i = 0; i < gradient.size(); ++i)
    if (!std::isfinite(gradient[i]))
      throw NumericalError("non-finite gradient entry at index " + std::to_string(i) + " (step " +
                           std::to_string(steps_ + 1) + ")");
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * gradient[i];
    return;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = gradient[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    theta[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
  }
}

}  // namespace hnce
