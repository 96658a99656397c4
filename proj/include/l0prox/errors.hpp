#pragma once

#include <stdexcept>
#include <string>

namespace l0prox {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite or structurally malformed numerical input.
struct InvalidData : Error {
  using Error::Error;
};

/// Operands whose shapes do not line up.
struct DimensionError : Error {
  using Error::Error;
};

/// Parameter outside its documented domain (lambda <= 0, tau <= 1, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// Solver initialisation that violates a required precondition.
struct InvalidInit : Error {
  using Error::Error;
};

/// Monotone-descent or support-shrinkage guarantee observed to fail.
/// Raised instead of being silently ignored: it signals that the
/// assumptions under which the solver was invoked do not hold.
struct NonDecreaseDetected : Error {
  using Error::Error;
};

/// Exhaustive enumeration refused because the problem is too large.
struct RefuseEnumeration : Error {
  using Error::Error;
};

/// A stated hypothesis of a bound or probabilistic guarantee is not
/// satisfied by the supplied parameters.
struct HypothesisError : Error {
  using Error::Error;
};

/// File could not be read or written.
struct IoError : Error {
  using Error::Error;
};

}  // namespace l0prox
