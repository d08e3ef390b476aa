#pragma once

#include <stdexcept>
#include <string>

namespace lbr {

// Bad or inconsistent user input (exit status 1 at the CLI).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a formula.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A series that has no finite value.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Effective speedup <= 1: the queues are not stable and no finite bound exists.
struct OverloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// r-bar == 0, nothing to scale against.
struct NoTrafficError : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace lbr
