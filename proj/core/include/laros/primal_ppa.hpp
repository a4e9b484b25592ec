#pragma once

#include <limits>

#include "laros/problem.hpp"
#include "laros/solve_report.hpp"

namespace laros {

struct PrimalConfig {
  double eps = 1e-6;          // tolerance on ||X_{k+1} - X_k|| / lambda_k
  int max_outer = 1000;
  // Plain gradient ascent needs far more steps than the dual module's
  // accelerated inner solver, and a cap-limited subproblem disables the
  // outer stopping test, so the default is generous.
  int max_inner = 2000;
  double lambda0 = 0.0;       // <= 0 selects 1/theta
  double lambda_growth = 1.2;
  double lambda_max = 0.0;    // <= 0 selects 1e4/theta
  double inner_tol = 0.0;     // base scale of the subproblem tolerance; <= 0 selects eps
  int cert_cadence = 10;

  void validate() const;
  double resolved_lambda0(double theta) const;
  double resolved_lambda_max(double theta) const;
  double inner_tol_at(int outer_k) const;  // min(0.1, 1/k^2) * base
};

// Concave inner objective of one proximal-point iteration, maximized over
// the multiplier z:
//
//   Theta(z) = z1 - 1/(2 lambda) ||P1(z)||_F^2 - 1/(2 lambda) ||P2(z)||_F^2
//   P1(z) = prox_nuclear(X1 + lambda (A z1 + Z2), lambda)
//   P2(z) = prox_l1    (X2 - lambda Z2,          lambda theta)
//
// with gradient (1 - <A, P1>, P2 - P1). The gradient is Lipschitz with
// modulus lambda (||A||_2^2 + 2), which fixes the ascent step.
double theta_inner_value(const ProblemSpec& spec, const PairedVariable& X,
                         const DualPoint& z, double lambda);
DualPoint theta_inner_gradient(const ProblemSpec& spec, const PairedVariable& X,
                               const DualPoint& z, double lambda);

struct InnerResult {
  DualPoint z;
  int iters = 0;
  double grad_norm = 0.0;
};

// Fixed-step gradient ascent on Theta from the warm start z0, stopping when
// ||grad Theta|| <= tol or after max_iters steps. The step stays below twice
// the inverse curvature, so the value never decreases.
InnerResult solve_inner(const ProblemSpec& spec, const PairedVariable& X,
                        double lambda, DualPoint z0, double tol, int max_iters);

struct PrimalState {
  PairedVariable X;
  DualPoint z;
  double lambda = 0.0;
  int outer = 0;
  long inner_total = 0;
  double residual = std::numeric_limits<double>::infinity();
  // Gradient norm where the last inner ascent stopped. The outer residual is
  // ||X_{k+1} - X_k|| / lambda_k, which shrinks with growing lambda whether
  // or not the iterate is any good; it is only a valid stopping quantity
  // when the inner subproblem actually reached its tolerance.
  double inner_grad_norm = std::numeric_limits<double>::infinity();
};

// One outer iteration: ascend Theta from the warm-started z, replace X by
// the two prox values at the returned multiplier, record
// ||X_next - X|| / lambda, then grow lambda.
void primal_step(const ProblemSpec& spec, PrimalState& st, const PrimalConfig& cfg);

SolveResult primal_solve(const ProblemSpec& spec, const PrimalConfig& cfg = {},
                         const Certifier& certifier = {});

}  // namespace laros
