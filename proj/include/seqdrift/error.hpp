#pragma once

#include <stdexcept>
#include <string>

namespace seqdrift {

// Invalid or inconsistent vector/matrix shapes.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad samples (NaN/Inf coordinates, malformed rows, unknown labels).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical degeneracy in a sequential update.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model rebuild could not complete; the previous model stays in place.
struct ReconstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or corrupt checkpoint/stream files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqdrift
