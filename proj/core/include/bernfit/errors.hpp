#pragma once

#include <stdexcept>
#include <string>

namespace bernfit {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (data 1, configuration 2, numerical 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid options, shape kinds, orders or dimension mismatches between
// arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. a time
// point outside [0,1] after mapping).
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Solver failures: infeasible constraint systems, non-convergence,
// matrices that are not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bernfit
