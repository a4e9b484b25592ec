#include "laros/primal_ppa.hpp"

#include <chrono>
#include <cmath>

#include "laros/errors.hpp"
#include "laros/linalg.hpp"

namespace laros {

namespace {

double check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidInput(std::string("primal config: ") + what + " must be positive");
  }
  return v;
}

// The two prox values entering both the inner objective and the outer
// update:
//   P1 = prox_nuclear(X1 + lambda (A z1 + Z2), lambda)
//   P2 = prox_l1    (X2 - lambda Z2,          lambda theta)
struct ProxPair {
  Matrix P1, P2;
};

ProxPair prox_pair(const ProblemSpec& spec, const PairedVariable& X,
                   const DualPoint& z, double lambda) {
  ProxPair p;
  p.P1 = prox_nuclear(X.X1 + lambda * (z.z1 * spec.A + z.Z2), lambda);
  p.P2 = prox_l1(X.X2 - lambda * z.Z2, lambda * spec.theta);
  return p;
}

}  // namespace

void PrimalConfig::validate() const {
  check_positive(eps, "eps");
  check_positive(lambda_growth, "lambda_growth");
  if (lambda_growth < 1.0) throw InvalidInput("primal config: lambda_growth < 1");
  if (max_outer < 1 || max_inner < 1) {
    throw InvalidInput("primal config: iteration caps must be >= 1");
  }
  if (cert_cadence < 1) throw InvalidInput("primal config: cert_cadence must be >= 1");
}

double PrimalConfig::resolved_lambda0(double theta) const {
  return lambda0 > 0.0 ? lambda0 : 1.0 / theta;
}

double PrimalConfig::resolved_lambda_max(double theta) const {
  return lambda_max > 0.0 ? lambda_max : 1e4 / theta;
}

double PrimalConfig::inner_tol_at(int outer_k) const {
  const double base = inner_tol > 0.0 ? inner_tol : eps;
  const double k = static_cast<double>(outer_k);
  return std::min(0.1, 1.0 / (k * k)) * base;
}

double theta_inner_value(const ProblemSpec& spec, const PairedVariable& X,
                         const DualPoint& z, double lambda) {
  ProxPair p = prox_pair(spec, X, z, lambda);
  return z.z1 - (p.P1.squaredNorm() + p.P2.squaredNorm()) / (2.0 * lambda);
}

DualPoint theta_inner_gradient(const ProblemSpec& spec, const PairedVariable& X,
                               const DualPoint& z, double lambda) {
  ProxPair p = prox_pair(spec, X, z, lambda);
  return {1.0 - (spec.A.array() * p.P1.array()).sum(), p.P2 - p.P1};
}

InnerResult solve_inner(const ProblemSpec& spec, const PairedVariable& X,
                        double lambda, DualPoint z0, double tol, int max_iters) {
  const double step = 1.0 / (lambda * (spec.a_norm2 * spec.a_norm2 + 2.0));
  InnerResult res;
  res.z = std::move(z0);
  for (int it = 0; it < max_iters; ++it) {
    DualPoint g = theta_inner_gradient(spec, X, res.z, lambda);
    res.grad_norm = g.norm();
    if (res.grad_norm <= tol) {
      res.iters = it;
      return res;
    }
    res.z.z1 += step * g.z1;
    res.z.Z2 += step * g.Z2;
    res.iters = it + 1;
  }
  // Cap reached; report the gradient norm at the final point.
  res.grad_norm = theta_inner_gradient(spec, X, res.z, lambda).norm();
  return res;
}

void primal_step(const ProblemSpec& spec, PrimalState& st, const PrimalConfig& cfg) {
  const int k = st.outer + 1;
  InnerResult inner = solve_inner(spec, st.X, st.lambda, st.z,
                                  cfg.inner_tol_at(k), cfg.max_inner);
  st.z = std::move(inner.z);
  st.inner_total += inner.iters;
  st.inner_grad_norm = inner.grad_norm;

  ProxPair p = prox_pair(spec, st.X, st.z, st.lambda);
  const double diff = std::sqrt((p.P1 - st.X.X1).squaredNorm() +
                                (p.P2 - st.X.X2).squaredNorm());
  st.residual = diff / st.lambda;
  st.X.X1 = std::move(p.P1);
  st.X.X2 = std::move(p.P2);
  st.outer = k;
  st.lambda = std::min(st.lambda * cfg.lambda_growth,
                       cfg.resolved_lambda_max(spec.theta));
}

SolveResult primal_solve(const ProblemSpec& spec, const PrimalConfig& cfg,
                         const Certifier& certifier) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds_since = [](auto start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  PrimalState st;
  st.X = PairedVariable::zero(spec.rows(), spec.cols());
  st.z = DualPoint::zero(spec.rows(), spec.cols());
  st.lambda = cfg.resolved_lambda0(spec.theta);

  SolveResult out;
  out.report.stop_reason = StopReason::IterationCap;
  while (st.outer < cfg.max_outer) {
    primal_step(spec, st, cfg);
    // An unconverged subproblem is not a proximal-point step, so the
    // residual test would pass on junk once lambda has grown; require the
    // inner tolerance to have been met before trusting it.
    if (st.residual < cfg.eps &&
        st.inner_grad_norm <= cfg.inner_tol_at(st.outer)) {
      out.report.stop_reason = StopReason::Residual;
      break;
    }
    if (certifier && st.outer % cfg.cert_cadence == 0) {
      const auto c0 = std::chrono::steady_clock::now();
      const bool ok = certifier(st.X, st.z.z1);
      out.report.certify_seconds += seconds_since(c0);
      if (ok) {
        out.report.stop_reason = StopReason::Certified;
        out.report.certified = true;
        break;
      }
    }
  }

  out.report.outer_iters = st.outer;
  out.report.inner_iters = st.inner_total;
  out.report.residual = st.residual;
  out.report.objective = pair_objective(spec, st.X);
  out.report.wall_seconds = seconds_since(t0);
  out.X = std::move(st.X);
  out.dual = std::move(st.z);
  return out;
}

}  // namespace laros
