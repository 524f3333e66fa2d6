#pragma once

#include <stdexcept>
#include <string>

namespace sggan {

/// Invalid sizes, counts, schemas or option combinations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Manifest and image ingestion failures. Messages carry the row number.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset operations whose preconditions do not hold (empty pools,
/// per-group counts larger than a group, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values reaching a loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint write/read failures, integrity and schema mismatches.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sggan
