#pragma once

#include <stdexcept>
#include <string>

namespace usual {

// Bad input data or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required column or key is missing from an input file.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failure inside estimation (singular matrices, non-finite
// log-likelihood, ...). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a transform.
class DomainError : public NumericalError {
 public:
  DomainError(const std::string& what, double value)
      : NumericalError(what), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

}  // namespace usual
