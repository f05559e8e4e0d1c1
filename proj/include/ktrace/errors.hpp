#pragma once

#include <stdexcept>

namespace ktrace {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files (bad rows, wrong column counts).
struct ParseError : Error {
  using Error::Error;
};

// Invalid model specs, experiment configs, or call arguments.
struct ConfigError : Error {
  using Error::Error;
};

// Dataset-level inconsistencies (missing Q-matrix rows, mismatched vocab).
struct DataError : Error {
  using Error::Error;
};

// Non-finite values or degenerate numerical situations.
struct NumericError : Error {
  using Error::Error;
};

// Metrics that are undefined on the given inputs (single-class AUC).
struct MetricError : Error {
  using Error::Error;
};

// Checkpoint container problems (unknown version tag, missing fields).
struct FormatError : Error {
  using Error::Error;
};

}  // namespace ktrace
