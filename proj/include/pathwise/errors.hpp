#pragma once

#include <stdexcept>
#include <string>

namespace pathwise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A strategy was queried at a history it does not cover.
class StrategyUndefined : public Error {
 public:
  using Error::Error;
};

/// The operation requires a 1-Lipschitz model and the check failed.
class LipschitzViolation : public Error {
 public:
  using Error::Error;
};

/// Bayes update conditioned on a signal of probability zero.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

/// Should not happen for finite models; signals a bug or a solver breakdown.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathwise
