#pragma once

#include <stdexcept>
#include <string>

namespace undf {

// Invalid argument or malformed input (bad spec, shape mismatch, bad JSON field).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A pattern combination whose sum is zero (or negative) everywhere.
class DegeneratePatternError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value inside a computation; the message names the layer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace undf
