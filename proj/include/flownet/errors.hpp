#pragma once

#include <stdexcept>
#include <string>

namespace flownet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model instance violates a structural assumption (shape, sign, sub-stochasticity).
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its domain, e.g. an analysis that needs a
/// stochastic irreducible routing matrix.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Iteration budget exhausted, residual not attained, or a non-finite state.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace flownet
