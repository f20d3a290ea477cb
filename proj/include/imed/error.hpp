#pragma once

#include <stdexcept>
#include <string>

namespace imed {

/// Invalid input: malformed configuration, schema violations, bad files.
/// Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during model fitting or estimation (rank deficiency,
/// separation, unstable weights). Maps to CLI exit code 1.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace imed
