#pragma once

#include <stdexcept>
#include <string>

namespace lmoamp {

/// Invalid numeric argument (non-finite input, non-positive variance, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A documented precondition of an operation was not met by the caller.
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Dimension mismatch between arguments.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Symmetric factorization failed at every rung of the jitter ladder.
class SingularCovarianceError : public std::runtime_error {
public:
  SingularCovarianceError(const std::string& what, double jitter)
      : std::runtime_error(what), jitter_(jitter) {}

  /// Absolute diagonal jitter of the last attempt.
  double jitter() const noexcept { return jitter_; }

private:
  double jitter_;
};

/// An Onsager divisor 1 - xi collapsed, or a harmonic difference went non-positive.
class DegenerateError : public std::runtime_error {
public:
  DegenerateError(const std::string& what, long iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

private:
  long iteration_;
};

/// A structural identity that must hold numerically was violated.
class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace lmoamp
