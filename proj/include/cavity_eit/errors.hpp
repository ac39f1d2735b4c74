#pragma once

#include <stdexcept>
#include <string>

namespace cavity_eit {

/// Bad arguments or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver failed: singular system, non-convergence, step underflow.
/// Maps to CLI exit code 3.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fock truncation too small or a space above the dimension cap.
/// Maps to CLI exit code 4.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavity_eit
