#pragma once

#include <vector>

#include "laros/problem.hpp"
#include "laros/solve_report.hpp"

namespace laros {

struct DualConfig {
  double eps = 1e-6;          // tolerance on ||b - map(X_k)||
  int max_outer = 1000;
  int max_inner = 30;
  double lambda0 = 0.0;       // <= 0 selects max(1/theta, 10 theta, 10)
  double lambda_growth = 1.0; // constant lambda keeps the capped inner
                              // solves accurate; growth > 1 trades that for
                              // faster outer contraction
  double lambda_max = 0.0;    // <= 0 selects 1e4/theta
  double inner_tol = 0.0;     // base scale of the subproblem tolerance; <= 0 selects eps
  int cert_cadence = 10;

  void validate() const;
  double resolved_lambda0(double theta) const;
  double resolved_lambda_max(double theta) const;
  double inner_tol_at(int outer_k) const;  // min(0.1, 1/k^1.5) * base
};

// Smooth part of the inner subproblem given the running multiplier y:
//
//   Psi(X) = 1/(2 lambda) ||y + lambda (b - map(X))||^2
//   grad Psi(X) = -adjoint(y + lambda (b - map(X)))
//
// The inner subproblem minimizes F(X) = ||X1||_* + theta ||X2||_1 + Psi(X).
double psi_value(const ProblemSpec& spec, const PairedVariable& X,
                 const DualPoint& y, double lambda);
PairedVariable psi_gradient(const ProblemSpec& spec, const PairedVariable& X,
                            const DualPoint& y, double lambda);

// F(X) evaluated directly (one SVD for the nuclear term).
double composite_objective(const ProblemSpec& spec, const PairedVariable& X,
                           const DualPoint& y, double lambda);

// Value of the quadratic majorant of F at S, built around Y with curvature t:
//   Q_t(S; Y) = ||S1||_* + theta ||S2||_1
//             + Psi(Y) + <grad Psi(Y), S - Y> + t/2 ||S - Y||^2
double quadratic_model_value(const ProblemSpec& spec, const PairedVariable& S,
                             const PairedVariable& Y, double t,
                             const DualPoint& y, double lambda);

// One prox-gradient step at curvature t: G = Y - grad Psi(Y)/t,
// S = (prox_nuclear(G1, 1/t), prox_l1(G2, theta/t)). nuclear_norm_S1 is
// ||S1||_* read off the thresholded singular values, so callers can form
// F(S) without a second SVD.
struct ProxStep {
  PairedVariable S;
  double nuclear_norm_S1 = 0.0;
};
ProxStep apg_prox_step(const ProblemSpec& spec, const PairedVariable& Y, double t,
                       const DualPoint& y, double lambda);

// Momentum update tau' = (1 + sqrt(1 + 4 tau^2)) / 2, the positive root of
// tau'^2 - tau' = tau^2.
double apg_tau_next(double tau);

// Optional per-iteration trace for diagnostics and tests.
struct ApgTrace {
  std::vector<double> t_values;    // accepted curvature per step
  std::vector<double> objectives;  // F(X_k) after each accepted step
  std::vector<double> majorization_slack;  // Q_t(S;Y) - F(S) per accepted step
  std::vector<int> restarts;       // steps where momentum was reset
};

struct ApgResult {
  PairedVariable X;
  int iters = 0;
  double objective = 0.0;  // F at the returned iterate
  double grad_map_norm = 0.0;
};

// Accelerated proximal gradient on F with:
//  - momentum Y_k = X_k + (tau_{k-1} - 1)/tau_k (X_k - X_{k-1}),
//    tau_{k+1} = (1 + sqrt(1 + 4 tau_k^2)) / 2;
//  - a backtracking curvature search that starts at
//    L = lambda (||A||_2^2 + 2), tries t <- 0.8 t once per step until a
//    shrink attempt fails the majorization test F(S) <= Q_t(S; Y), and keeps
//    the last valid t from then on; t never exceeds L, and a shrunk t that
//    later stops majorizing climbs back toward L rather than past it;
//  - a monotone restart: momentum is reset whenever F increases, so the
//    objective is non-increasing right after every restart;
//  - termination when the composite gradient mapping norm t ||Y - S_t(Y)||
//    drops to tol.
ApgResult apg_solve(const ProblemSpec& spec, const DualPoint& y, double lambda,
                    PairedVariable X0, double tol, int max_iters,
                    ApgTrace* trace = nullptr);

struct DualState {
  PairedVariable X;
  DualPoint y;
  double lambda = 0.0;
  int outer = 0;
  long inner_total = 0;
  double residual = std::numeric_limits<double>::infinity();
};

// One outer iteration: run the inner APG warm-started at the previous X,
// then y <- y + lambda (b - map(X)); the recorded residual
// ||(y_k - y_{k+1}) / lambda|| equals ||b - map(X)|| exactly.
void dual_step(const ProblemSpec& spec, DualState& st, const DualConfig& cfg);

SolveResult dual_solve(const ProblemSpec& spec, const DualConfig& cfg = {},
                       const Certifier& certifier = {});

}  // namespace laros
