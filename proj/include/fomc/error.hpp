#pragma once

#include <stdexcept>
#include <string>

namespace fomc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, failed preconditions, bad configuration. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, singular systems, failed factorizations. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fomc
