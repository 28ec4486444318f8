#pragma once

#include <stdexcept>
#include <string>

namespace ghlin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A contract on the inputs was violated (bad arguments, failed criterion,
/// perturbation too large for the requested bound).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative certification step ran past its configured cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

}  // namespace ghlin
