#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "laros/linalg.hpp"
#include "laros/matrix.hpp"
#include "laros/problem.hpp"
#include "laros/solve_report.hpp"

namespace laros {

// Row/column index sets of a candidate block, plus the permutations that
// bring the block to the upper-left corner: position p of the permuted frame
// holds original index row_order[p] (support indices first, complement
// after, both in increasing order).
struct SupportPattern {
  std::vector<int> rows, cols;
  std::vector<int> row_order, col_order;

  bool operator==(const SupportPattern& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

// Rows/columns of X2 holding an entry with |value| strictly above
// rel_threshold * max|X2|. Throws InvalidInput when X2 is identically zero.
SupportPattern extract_support(const Matrix& X2, double rel_threshold = 1e-6);

// Candidate optimality data for a rank-one solution supported on the block:
// lambda estimates the optimal objective value (the reciprocal dual norm of
// A), u1/v1 the unit singular pair of the block, and eps bounds the distance
// of (lambda, u1, v1) to the exact root.
struct CandidateTriple {
  double lambda = 0.0;
  Vector u1, v1;
  double eps = 0.0;
};

// Square root-finding system for the candidate triple, with
// B = lambda A11 - theta E (E = all ones):
//
//   F(lambda, u, v) = ( B v - u,  B^T u - v,  u^T u - 1 )
//
// M + N + 1 equations in M + N + 1 unknowns, ordered (lambda, u, v).
Vector newton_residual(const Matrix& A11, double theta, const CandidateTriple& x);
Matrix newton_jacobian(const Matrix& A11, double theta, const CandidateTriple& x);

struct NewtonResult {
  CandidateTriple x;  // eps = Kantorovich bound at the refined point when
                      // available, else the norm of the last Newton step
  int iters = 0;
  double residual_norm = 0.0;
  double last_step_norm = 0.0;
};

// Full-step Newton iteration until ||F|| <= eps_s. Throws NumericError on a
// singular Jacobian or when max_iters is exhausted without convergence.
NewtonResult newton_solve(const Matrix& A11, double theta, CandidateTriple x0,
                          double eps_s = 1e-10, int max_iters = 50);

// Kantorovich sufficient condition for Newton convergence from x0:
//   B = ||J(x0)^{-1}||_2, eta = ||J(x0)^{-1} F(x0)||,
//   K = 2 sqrt(||A11||_2^2 + 1)  (Lipschitz constant of the Jacobian),
//   h = B K eta <= 1/2  => a root exists within
//   t* = 2 eta / (1 + sqrt(1 - 2h)) of x0.
struct KantorovichReport {
  double B = 0.0, eta = 0.0, K = 0.0, h = 0.0, t_star = 0.0;
  bool passed = false;
};
KantorovichReport kantorovich_check(const Matrix& A11, double theta,
                                    const CandidateTriple& x0);

// min ||w - w_bar||^2  s.t.  u^T w = 0,  lo <= w <= hi.
// Solved exactly: w(mu) = clip(w_bar - mu u, lo, hi) makes g(mu) = u^T w(mu)
// piecewise linear and non-increasing; a sorted breakpoint scan finds the
// root segment. Throws NumericError when the box is inconsistent or excludes
// the hyperplane.
Vector knapsack_project(const Vector& w_bar, const Vector& u, const Vector& lo,
                        const Vector& hi);

// Everything needed to project onto the feasible set of the certificate
// search, in the permuted frame: A partitioned around the support block, the
// refined triple, and the accuracy eps of the triple.
struct CertificateFrame {
  Matrix A11, A12, A21, A22;
  Vector u1, v1;
  double theta = 0.0, lambda = 0.0, eps = 0.0;

  int block_rows() const { return static_cast<int>(A11.rows()); }
  int block_cols() const { return static_cast<int>(A11.cols()); }
  double delta12() const;  // theta - (max|A12| + 5) eps, box half-width of W12
  double delta21() const;  // theta - (max|A21| + 5) eps
};

// Blockwise projection:
//   (1,1) fixed to (lambda A11 - theta E) - u1 v1^T,
//   (1,2) per column: u1^T w = 0, ||w - lambda a||_inf <= delta12,
//   (2,1) per row:    v1^T w = 0, ||w - lambda a||_inf <= delta21,
//   (2,2) clipped into lambda A22 +/- theta.
// Throws NumericError when a margin is negative or a knapsack is infeasible.
Matrix project_certificate(const Matrix& W, const CertificateFrame& frame);

// u1 v1^T for the leading singular pair of W; a subgradient of the spectral
// norm with unit Frobenius norm. Throws NumericError for W = 0.
Matrix spectral_subgradient(const Matrix& W);

struct CertifyConfig {
  double support_threshold = 1e-6;
  double eps_s = 1e-10;         // Newton residual target
  int newton_max_iters = 50;
  int max_refine_dim = 300;     // decline supports whose Newton system
                                // exceeds this dimension; factorization cost
                                // grows cubically and mid-solve supports of
                                // image-scale problems are rarely final
  int subgrad_max_iters = 500;
  double subgrad_step0 = 0.1;   // alpha_k = subgrad_step0 / sqrt(k)
  int stall_window = 50;        // stop when best improves less than
  double stall_improvement = 1e-9;  // this much over the window
  double lambda_hint = 0.0;     // <= 0: seed Newton with the current
                                // objective value ||X1||_* + theta ||X2||_1
};

// Slack of the five optimality conditions; certified iff all nonnegative.
//   [0] fixed (1,1) block matches exactly (negated max deviation)
//   [1] (1,2) box slack; negated residual of u1^T W12 = 0 if above 1e-10
//   [2] (2,1) box slack; same convention for W21 v1 = 0
//   [3] theta - ||W22 - lambda A22||_max
//   [4] (1 - (||A||_2 + 7.5) eps) - ||W||_2
struct CertificateResult {
  bool certified = false;
  SupportPattern support;
  CandidateTriple triple;
  KantorovichReport kantorovich;
  Matrix W;  // best candidate found, in the permuted frame
  double spectral = std::numeric_limits<double>::infinity();
  std::array<double, 5> margins{};
  int subgrad_iters = 0;
  std::vector<double> spectral_trace;  // ||W_k||_2 per subgradient iterate
  std::string note;  // why certification stopped short, when it did
};

// Full certification attempt on the current iterate: support extraction,
// Newton refinement gated by the Kantorovich test, then a projected
// subgradient search for a spectral-norm witness. Failure to certify is a
// normal result (certified = false), never an exception.
CertificateResult certify(const ProblemSpec& spec, const PairedVariable& X,
                          const CertifyConfig& cfg = {});

// Wraps certify as a solver early-termination hook. When sink is non-null,
// every call stores its result there (the last one wins).
Certifier make_certifier(const ProblemSpec& spec, CertifyConfig cfg = {},
                         std::shared_ptr<CertificateResult> sink = nullptr);

}  // namespace laros
