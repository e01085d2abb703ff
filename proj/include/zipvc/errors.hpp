#pragma once

#include <stdexcept>
#include <string>

namespace zipvc {

// Bad files, schema violations, invalid options. CLI exit code 3.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Convergence failures, boundary fits, broken covariance estimates. CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundaryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace zipvc
