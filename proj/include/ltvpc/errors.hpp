#pragma once

#include <stdexcept>
#include <string>

namespace ltvpc {

/// Rejected inputs: bad dimensions, invalid parameters, unmet preconditions.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

class RangeError : public ValidationError {
 public:
  explicit RangeError(const std::string& what) : ValidationError(what) {}
};

class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& what) : ValidationError(what) {}
};

/// A guarded theorem premise does not hold for the supplied arguments.
class PreconditionError : public ValidationError {
 public:
  explicit PreconditionError(const std::string& what) : ValidationError(what) {}
};

class UncontrollableError : public ValidationError {
 public:
  explicit UncontrollableError(const std::string& what) : ValidationError(what) {}
};

/// Terminal state not reachable: controllability-window matrix is row-rank deficient.
class RankError : public ValidationError {
 public:
  explicit RankError(const std::string& what) : ValidationError(what) {}
};

class DegenerateInstanceError : public ValidationError {
 public:
  explicit DegenerateInstanceError(const std::string& what) : ValidationError(what) {}
};

/// Runtime failures of iterative solvers.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), last_residual(residual) {}
  double last_residual;
};

}  // namespace ltvpc
