#pragma once

#include <stdexcept>
#include <string>

namespace fatrack {

/// Invalid dimensions, parameters, or configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or decomposition failed (singular innovation covariance,
/// eigensolver failure, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough information to produce an estimate (e.g. fewer than two
/// spectral lines when a line spacing is requested).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fatrack
