#pragma once

#include <stdexcept>
#include <string>

namespace choir {

// Base class for all errors raised by the library. The CLI maps each
// category onto a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or array shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or a diverging computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input data such as corrupt files or out-of-range indices.
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace choir
