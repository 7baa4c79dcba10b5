#pragma once

#include <stdexcept>
#include <string>

namespace gcwp {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid weights, inconsistent sizes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Transition matrix has no power with all entries positive.
class NotMixingError : public Error {
 public:
  using Error::Error;
};

// A state/word/node budget was exceeded.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

// An iterative solver failed to reach its tolerance.
class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

// Leading eigenvalue not simple (or not separated) within tolerance.
class NonSimpleLeadingError : public Error {
 public:
  using Error::Error;
};

// The Legendre slope test could not classify a point as finite or -inf.
class AmbiguousBoundaryError : public Error {
 public:
  using Error::Error;
};

// A maximum is degenerate where a non-degenerate one is required.
class DegenerateMaximumError : public Error {
 public:
  using Error::Error;
};

// Effective sample size of an importance-sampling run fell below the guard.
class LowEssError : public Error {
 public:
  using Error::Error;
};

// An operation only supports potentials/observables up to a given depth.
class DepthUnsupportedError : public Error {
 public:
  using Error::Error;
};

// Requested combination is outside the supported scope (reported, not guessed).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcwp
