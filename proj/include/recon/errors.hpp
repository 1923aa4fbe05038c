#pragma once

#include <stdexcept>
#include <string>

namespace recon {

/// Operand shapes disagree (grid, time grid, or channel count).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A request exceeds what the discretization can provide (e.g. m > n).
class CapacityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regularization or solver settings that cannot produce a well-posed problem.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown that should not happen for valid inputs.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_dims(bool ok, const std::string& what);

}  // namespace recon
