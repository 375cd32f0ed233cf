#pragma once

#include <stdexcept>
#include <string>

namespace hnce {

// Invalid configuration or arguments. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exact computation would exceed its enumeration caps.
class LimitError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Non-finite values or a diverged run. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hnce
