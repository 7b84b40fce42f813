#pragma once

#include <stdexcept>
#include <string>

namespace scatterpty {

/// Invalid argument, grid mismatch, or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A resampling request that would produce a grid smaller than 4x4.
class DegenerateGridError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Non-finite values appeared during an iterative computation.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scatterpty
