#pragma once

#include <stdexcept>
#include <string>

namespace lbcp {

/// Distribution parameters outside the family's domain.
class ParameterDomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments violating an operation's precondition (shapes, indices, sizes).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// moment_match could not find parameters in the family's range.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A pairing with no implementation (conjugate marginal, closed-form KL on request).
class UnsupportedPairError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric routine finished without reaching the requested accuracy.
class AccuracyError : public std::runtime_error {
public:
  AccuracyError(const std::string& what, double achieved_bound)
      : std::runtime_error(what), achieved_bound_(achieved_bound) {}
  double achieved_bound() const noexcept { return achieved_bound_; }

private:
  double achieved_bound_;
};

/// Loss-based prior cannot be formed (every competitor at infinite divergence).
class PriorUndefinedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-support input data. Carries a 1-based line number when known.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Maximum-likelihood fit failed for a segment.
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration file or option values.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lbcp
