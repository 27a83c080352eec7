#pragma once

#include <stdexcept>

namespace xscript {

// Error taxonomy used across the library. The CLI maps these to process
// exit codes: ConfigError -> 1, DataError -> 2, ShapeError/NumericError -> 3.

// Invalid configuration: bad hyperparameter, out-of-range layer index, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data: unparseable TSV line, unknown label, bad vocab id, ...
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimension mismatch.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric failure: non-finite loss, degenerate softmax row, solver breakdown.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace xscript
