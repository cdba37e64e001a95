#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmgn {

// Precondition or configuration violation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Zero-norm vector where a direction is required.
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Operand dimensions disagree.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A non-finite value showed up in a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. `location` is a byte offset for binary files and a
// 1-based line number for text files.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t location)
      : IoError(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

}  // namespace cmgn
