#pragma once

#include <stdexcept>
#include <string>

namespace blockrg {

// Bad parameters or malformed input. CLI exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A hard enumeration or integration cap was hit. CLI exit code 3.
struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition or field-domain violation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Singular or indefinite operator.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An identity or oracle comparison failed. CLI exit code 4.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace blockrg
