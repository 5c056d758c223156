#pragma once

#include <stdexcept>
#include <string>

namespace creditarf {

// Bad input files, schema violations, malformed configs. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values in a forward pass, loss or gradient. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Samples that do not carry what the configured pipeline mode needs. CLI exit code 4.
class ModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace creditarf
