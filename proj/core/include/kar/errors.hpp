#pragma once

#include <stdexcept>

namespace kar {

// Inputs violate an operation's contract (shape mismatch, bad range, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The median heuristic collapsed to a zero bandwidth.
struct DegenerateBandwidth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A regularized solve stayed singular even after jitter escalation.
struct IllConditioned : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read, or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A schema names a column the file does not have.
struct MissingColumn : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ingestion dropped every row.
struct EmptyData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kar
