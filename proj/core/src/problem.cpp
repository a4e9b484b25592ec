#include "laros/problem.hpp"

#include <cmath>
#include <cstdio>

#include "laros/errors.hpp"
#include "laros/linalg.hpp"
#include "laros/solve_report.hpp"

namespace laros {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Residual: return "residual";
    case StopReason::Certified: return "certified";
    case StopReason::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

std::string SolveReport::tuple() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(%d,%ld,%.2fs,%.2fs)", outer_iters,
                inner_iters, wall_seconds, certify_seconds);
  return buf;
}

ProblemSpec::ProblemSpec(Matrix a, double theta_) : A(std::move(a)), theta(theta_) {
  if (A.rows() < 1 || A.cols() < 1) throw InvalidInput("problem: empty matrix");
  require_finite(A, "problem matrix");
  if (A.isZero(0.0)) throw InvalidInput("problem: A is identically zero");
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidInput("problem: theta must be positive and finite");
  }
  a_norm2 = spectral_norm(A);
}

PairedVariable PairedVariable::zero(int rows, int cols) {
  return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
}

double PairedVariable::norm() const {
  return std::sqrt(X1.squaredNorm() + X2.squaredNorm());
}

DualPoint DualPoint::zero(int rows, int cols) {
  return {0.0, Matrix::Zero(rows, cols)};
}

double DualPoint::norm() const {
  return std::sqrt(z1 * z1 + Z2.squaredNorm());
}

DualPoint apply_map(const ProblemSpec& spec, const PairedVariable& X) {
  return {(spec.A.array() * X.X1.array()).sum(), X.X1 - X.X2};
}

PairedVariable apply_adjoint(const ProblemSpec& spec, const DualPoint& z) {
  return {z.z1 * spec.A + z.Z2, -z.Z2};
}

double theta_norm(const Matrix& X, double theta) {
  if (X.isZero(0.0)) return 0.0;
  return svd(X).sigma.sum() + theta * X.cwiseAbs().sum();
}

double pair_objective(const ProblemSpec& spec, const PairedVariable& X) {
  const double nuc = X.X1.isZero(0.0) ? 0.0 : svd(X.X1).sigma.sum();
  return nuc + spec.theta * X.X2.cwiseAbs().sum();
}

DualPoint project_dual_cone(DualPoint z, Cone cone) {
  switch (cone) {
    case Cone::Zero:
      return z;  // dual of {0} is the whole space
    case Cone::NonnegativeOrthant:
      z.z1 = std::max(z.z1, 0.0);
      z.Z2 = z.Z2.cwiseMax(0.0);
      return z;
  }
  throw InvalidInput("project_dual_cone: unknown cone");
}

}  // namespace laros
