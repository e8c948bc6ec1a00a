#pragma once

#include <stdexcept>
#include <string>

namespace cycleqm {

// Bad or inconsistent run configuration (file syntax, schema, unknown keys).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric invariant was violated at runtime (non-finite entries, trace
// drift, Hermiticity loss, inconsistent marginals, ...).
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver stopped without reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

// A factor inverse was requested but the condition estimate tripped the guard.
class SingularFactorError : public std::runtime_error {
 public:
  SingularFactorError(const std::string& what, double condition)
      : std::runtime_error(what), condition(condition) {}
  double condition;
};

}  // namespace cycleqm
