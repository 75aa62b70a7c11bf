#pragma once

#include <stdexcept>
#include <string>

namespace dynrisk {

// Argument outside the mathematical domain of an operation (x <= 0, dt <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid or inconsistent configuration. Maps to CLI exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The risk constraint admits no control at some state. Maps to exit status 3.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical diagnostic tripped (non-monotone iteration, non-interval
// feasible set, grid too narrow). Maps to exit status 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynrisk
