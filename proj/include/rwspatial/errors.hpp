#pragma once

#include <stdexcept>
#include <string>

namespace rwspatial {

/// Bad configuration: unknown keys, missing covariates, malformed options.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: dangling edges, non-positive distances, invalid categories.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: singular systems, overflow, non-finite states.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bordered solve hit a singular system; the generator is almost always reducible.
class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// More than one near-zero eigenvalue where exactly one was expected.
class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rwspatial
