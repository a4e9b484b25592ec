#pragma once

#include "laros/matrix.hpp"

namespace laros {

// One instance of the block-extraction program
//
//   minimize ||X1||_* + theta ||X2||_1
//   subject to <A, X1> = 1,  X1 - X2 = 0,
//
// written with the split variable X = (X1, X2) so each norm gets its own
// prox. The right-hand side is b = (1, 0) and the constraints live in
// R x R^{m x n}.
struct ProblemSpec {
  Matrix A;
  double theta = 0.0;
  double a_norm2 = 0.0;  // spectral norm of A, cached at construction

  ProblemSpec(Matrix a, double theta_);

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

struct PairedVariable {
  Matrix X1, X2;

  static PairedVariable zero(int rows, int cols);
  double norm() const;  // sqrt(||X1||_F^2 + ||X2||_F^2)
};

// Multiplier z = (z1, Z2) for (<A, X1> = 1, X1 - X2 = 0).
struct DualPoint {
  double z1 = 0.0;
  Matrix Z2;

  static DualPoint zero(int rows, int cols);
  double norm() const;
};

// Constraint map and its adjoint:
//   apply_map(X)     = (<A, X1>, X1 - X2)
//   apply_adjoint(z) = (z1 * A + Z2, -Z2)
DualPoint apply_map(const ProblemSpec& spec, const PairedVariable& X);
PairedVariable apply_adjoint(const ProblemSpec& spec, const DualPoint& z);

// ||X||_* + theta ||X||_1
double theta_norm(const Matrix& X, double theta);

// ||X1||_* + theta ||X2||_1, the objective of the split program.
double pair_objective(const ProblemSpec& spec, const PairedVariable& X);

// Projection onto the dual cone of the constraint cone. The equality
// constraints use cone {0}, whose dual is the whole space, so the projection
// is the identity; the nonnegative-orthant variant clips negative parts and
// is included for completeness.
enum class Cone { Zero, NonnegativeOrthant };
DualPoint project_dual_cone(DualPoint z, Cone cone);

}  // namespace laros
