#pragma once

#include <stdexcept>
#include <string>

namespace mdagar {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, shape mismatch, or a parameter outside its domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Factorization failure or non-finite arithmetic that survived the jitter
/// fallback.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdagar
