#pragma once

#include <stdexcept>

namespace ceskd {

// Invalid model/run configuration (shape mismatches, bad pool sizes, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad data content (labels out of range, zero-variance channels, ...).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files: checkpoints, curriculum tables, configs, IDX/CIFAR blobs.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API called out of order (backward before forward, ...).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mathematical-domain violations (temperature <= 0, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where the engine requires finite ones.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ceskd
