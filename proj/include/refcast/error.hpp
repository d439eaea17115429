#pragma once

#include <stdexcept>
#include <string>

namespace refcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data or configuration. The CLI maps this to exit code 2.
class InputError : public Error {
public:
  using Error::Error;
};

/// A precondition on a numerical routine was violated.
class DomainError : public Error {
public:
  using Error::Error;
};

/// The numerics produced something unusable (non-finite objective, singular system).
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace refcast
