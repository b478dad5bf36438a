#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subspace_perturb {

// Malformed input: non-finite entries, empty shapes, out-of-range counts.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// An inverse of a (near) singular diagonal was requested, e.g. sigma_r(Xhat)
// fell below the rank threshold.
class RankDeficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required precondition of an operation (symmetry, spectral gap, ...) is not
// satisfied. Bound evaluators never throw this for theorem preconditions; they
// record the failure in the report instead.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& method, std::size_t iteration_budget)
      : std::runtime_error(method + " did not converge within " +
                           std::to_string(iteration_budget) + " iterations"),
        iteration_budget_(iteration_budget) {}

  std::size_t iteration_budget() const noexcept { return iteration_budget_; }

 private:
  std::size_t iteration_budget_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace subspace_perturb
