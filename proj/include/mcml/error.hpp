#pragma once

#include <stdexcept>
#include <string>

namespace mcml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration: out-of-range counts, mismatched
/// dimensions, malformed files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, overflow, degenerate weights, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration requested for an instance above the feasibility cap.
class InfeasibleExactError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcml
