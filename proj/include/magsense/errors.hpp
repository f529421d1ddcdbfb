#pragma once

#include <stdexcept>
#include <string>

namespace magsense {

// Input outside the mathematical domain of an operation (negative rates, x out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A documented precondition does not hold (unmatched modulation frequencies, nonzero detuning
// for a zero-detuning formula, empty grid, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integration step too coarse for the fastest rate of the drift matrix.
class StiffnessError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// The linearized dynamics are not asymptotically stable, so no stationary spectrum exists.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two independent routes to the same quantity disagree (Routh-Hurwitz vs eigenvalues).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or unknown configuration content.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace magsense
