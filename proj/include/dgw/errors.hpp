#pragma once

#include <stdexcept>
#include <string>

namespace dgw {

// Base of all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, dimension mismatch, out-of-range index.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (files, tables).
class InputError : public Error {
 public:
  using Error::Error;
};

// Scale violates the wave-kernel stability bound s * lambda_max < 4.
class StabilityError : public Error {
 public:
  using Error::Error;
};

// Eigensolver failure, divergent iteration, internal consistency violation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Coefficient tensor carries no energy, so there is nothing to localize.
class NoEventError : public Error {
 public:
  NoEventError() : Error("no event detected") {}
};

}  // namespace dgw
