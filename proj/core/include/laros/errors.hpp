#pragma once

#include <stdexcept>

namespace laros {

// File and stream failures: missing files, malformed CSV/PGM content,
// unwritable paths.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally invalid arguments: dimension mismatches, non-finite entries,
// out-of-range configuration values, empty supports.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure inside an algorithm: singular Jacobian, infeasible
// projection subproblem, an iteration that did not converge.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace laros
