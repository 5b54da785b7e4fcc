#pragma once

#include <stdexcept>

namespace wspec {

/// A caller-supplied series, grid or parameter violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative computation could not produce a usable result.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wspec
