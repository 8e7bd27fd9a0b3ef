#pragma once

#include <stdexcept>
#include <string>

namespace minigt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input data files (also exit code 2).
struct DataError : Error {
  using Error::Error;
};

// Invalid argument to a library operation.
struct ArgumentError : Error {
  using Error::Error;
};

// Synthetic graph construction could not satisfy its constraints.
struct GenerationError : Error {
  using Error::Error;
};

// Non-finite values, failed convergence, failed verification (exit code 3).
struct NumericalError : Error {
  using Error::Error;
};

struct DivergenceError : NumericalError {
  long iteration;
  DivergenceError(const std::string& msg, long t) : NumericalError(msg), iteration(t) {}
};

}
