#pragma once

#include <stdexcept>
#include <string>

namespace sim2real {

// Base of every error raised by the library. Commands map InputError to exit
// code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed: bad shapes, ranges, paths or flags.
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class RangeError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

// A training loss went NaN/Inf.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace sim2real
