#pragma once

#include <stdexcept>
#include <string>

namespace kdtopo {

/// Invalid input: bad parameters, mismatched dimensions, malformed files.
/// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public ValidationError {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : ValidationError("dimension mismatch: expected " + std::to_string(expected) +
                        ", got " + std::to_string(got)) {}
};

/// A computation hit a numeric degeneracy it cannot recover from
/// (e.g. a candidate net larger than the configured cap). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdtopo
