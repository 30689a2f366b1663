#pragma once

#include <stdexcept>
#include <string>

namespace kinrescale {

// Bad input file or option value. CLI maps this family to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_number(line) {}
  int line_number;
};

// Numerical failures. CLI maps these to exit code 2.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Advection step asked to move information across more than one cell.
struct CflError : SolverError {
  using SolverError::SolverError;
};

// Negative density or temperature out of a hydro stage.
struct PositivityError : SolverError {
  using SolverError::SolverError;
};

// NaN/Inf, or an imaginary residue too large after an inverse transform.
struct BreakdownError : SolverError {
  using SolverError::SolverError;
};

// Request outside the supported parameter envelope (cost guards included).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kinrescale
