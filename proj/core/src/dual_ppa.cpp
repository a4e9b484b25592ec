#include "laros/dual_ppa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "laros/errors.hpp"
#include "laros/linalg.hpp"

namespace laros {

namespace {

// y + lambda (b - map(X)), the point entering both Psi and its gradient.
DualPoint shifted_residual(const ProblemSpec& spec, const PairedVariable& X,
                           const DualPoint& y, double lambda) {
  DualPoint r;
  r.z1 = y.z1 + lambda * (1.0 - (spec.A.array() * X.X1.array()).sum());
  r.Z2 = y.Z2 - lambda * (X.X1 - X.X2);
  return r;
}

struct StepEval {
  PairedVariable S;
  double penalty = 0.0;  // ||S1||_* + theta ||S2||_1
  double psi = 0.0;
  double dist2 = 0.0;    // ||S - Y||^2
  double lin = 0.0;      // <grad Psi(Y), S - Y>
};

StepEval eval_prox_step(const ProblemSpec& spec, const PairedVariable& Y,
                        const PairedVariable& grad, double t, const DualPoint& y,
                        double lambda) {
  StepEval e;
  ProxNuclearResult p1 = prox_nuclear_ex(Y.X1 - grad.X1 / t, 1.0 / t);
  e.S.X1 = std::move(p1.P);
  e.S.X2 = prox_l1(Y.X2 - grad.X2 / t, spec.theta / t);
  e.penalty = p1.nuclear_norm + spec.theta * e.S.X2.cwiseAbs().sum();
  DualPoint r = shifted_residual(spec, e.S, y, lambda);
  e.psi = (r.z1 * r.z1 + r.Z2.squaredNorm()) / (2.0 * lambda);
  const Matrix d1 = e.S.X1 - Y.X1;
  const Matrix d2 = e.S.X2 - Y.X2;
  e.dist2 = d1.squaredNorm() + d2.squaredNorm();
  e.lin = (grad.X1.array() * d1.array()).sum() + (grad.X2.array() * d2.array()).sum();
  return e;
}

}  // namespace

void DualConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw InvalidInput("dual config: eps must be positive");
  }
  if (lambda_growth < 1.0 || !std::isfinite(lambda_growth)) {
    throw InvalidInput("dual config: lambda_growth must be >= 1");
  }
  if (max_outer < 1 || max_inner < 1) {
    throw InvalidInput("dual config: iteration caps must be >= 1");
  }
  if (cert_cadence < 1) throw InvalidInput("dual config: cert_cadence must be >= 1");
}

double DualConfig::resolved_lambda0(double theta) const {
  // 1/theta anchors the small-theta regime. The floor matters for large
  // theta: each outer step moves y by at most lambda, and the dual optimum
  // grows like theta, so a vanishing lambda cannot reach it within the
  // iteration cap. Very large lambda is no good either: the inner problem
  // is strongly convex with modulus 1/lambda, and a capped inner solve
  // loses the sparsity pattern when lambda explodes.
  return lambda0 > 0.0 ? lambda0
                       : std::max({1.0 / theta, 10.0 * theta, 10.0});
}

double DualConfig::resolved_lambda_max(double theta) const {
  return lambda_max > 0.0 ? lambda_max : 1e4 / theta;
}

double DualConfig::inner_tol_at(int outer_k) const {
  const double base = inner_tol > 0.0 ? inner_tol : eps;
  return std::min(0.1, std::pow(static_cast<double>(outer_k), -1.5)) * base;
}

double psi_value(const ProblemSpec& spec, const PairedVariable& X,
                 const DualPoint& y, double lambda) {
  DualPoint r = shifted_residual(spec, X, y, lambda);
  return (r.z1 * r.z1 + r.Z2.squaredNorm()) / (2.0 * lambda);
}

PairedVariable psi_gradient(const ProblemSpec& spec, const PairedVariable& X,
                            const DualPoint& y, double lambda) {
  DualPoint r = shifted_residual(spec, X, y, lambda);
  return {-(r.z1 * spec.A + r.Z2), r.Z2};
}

double composite_objective(const ProblemSpec& spec, const PairedVariable& X,
                           const DualPoint& y, double lambda) {
  return pair_objective(spec, X) + psi_value(spec, X, y, lambda);
}

double quadratic_model_value(const ProblemSpec& spec, const PairedVariable& S,
                             const PairedVariable& Y, double t,
                             const DualPoint& y, double lambda) {
  PairedVariable g = psi_gradient(spec, Y, y, lambda);
  const Matrix d1 = S.X1 - Y.X1;
  const Matrix d2 = S.X2 - Y.X2;
  const double lin = (g.X1.array() * d1.array()).sum() + (g.X2.array() * d2.array()).sum();
  const double dist2 = d1.squaredNorm() + d2.squaredNorm();
  return pair_objective(spec, S) + psi_value(spec, Y, y, lambda) + lin + 0.5 * t * dist2;
}

ProxStep apg_prox_step(const ProblemSpec& spec, const PairedVariable& Y, double t,
                       const DualPoint& y, double lambda) {
  if (!(t > 0.0)) throw InvalidInput("apg_prox_step: t must be positive");
  PairedVariable g = psi_gradient(spec, Y, y, lambda);
  ProxNuclearResult p1 = prox_nuclear_ex(Y.X1 - g.X1 / t, 1.0 / t);
  ProxStep out;
  out.S.X1 = std::move(p1.P);
  out.S.X2 = prox_l1(Y.X2 - g.X2 / t, spec.theta / t);
  out.nuclear_norm_S1 = p1.nuclear_norm;
  return out;
}

double apg_tau_next(double tau) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tau * tau));
}

ApgResult apg_solve(const ProblemSpec& spec, const DualPoint& y, double lambda,
                    PairedVariable X0, double tol, int max_iters, ApgTrace* trace) {
  if (!(lambda > 0.0)) throw InvalidInput("apg_solve: lambda must be positive");
  const double L0 = lambda * (spec.a_norm2 * spec.a_norm2 + 2.0);
  double t = L0;
  bool may_shrink = true;

  PairedVariable Xc = std::move(X0);
  PairedVariable Xp = Xc;
  double Fc = composite_objective(spec, Xc, y, lambda);
  double tau_c = 1.0, tau_p = 1.0;

  ApgResult res;
  res.objective = Fc;
  res.grad_map_norm = std::numeric_limits<double>::infinity();

  for (int it = 0; it < max_iters; ++it) {
    const double w = (tau_p - 1.0) / tau_c;
    PairedVariable Y{Xc.X1 + w * (Xc.X1 - Xp.X1), Xc.X2 + w * (Xc.X2 - Xp.X2)};
    DualPoint r = shifted_residual(spec, Y, y, lambda);
    const double psi_y = (r.z1 * r.z1 + r.Z2.squaredNorm()) / (2.0 * lambda);
    PairedVariable grad{-(r.z1 * spec.A + r.Z2), r.Z2};

    // Majorization-checked curvature: one shrink attempt per step while
    // allowed; on failure revert to the kept t. Should the kept t itself
    // stop majorizing (the base modulus is not a true upper bound for every
    // A), climb back toward the base value, which is always accepted; the
    // restart below absorbs the rare step where even that is optimistic.
    const double slack = 1e-12 * (1.0 + std::abs(psi_y));
    double t_try = may_shrink ? 0.8 * t : t;
    StepEval e = eval_prox_step(spec, Y, grad, t_try, y, lambda);
    while (e.psi > psi_y + e.lin + 0.5 * t_try * e.dist2 + slack) {
      if (t_try < t) {
        may_shrink = false;  // the shrink attempt failed; keep the valid t
        t_try = t;
      } else if (t_try < L0) {
        may_shrink = false;
        t_try = std::min(L0, t_try / 0.8);
      } else {
        break;
      }
      e = eval_prox_step(spec, Y, grad, t_try, y, lambda);
    }
    t = t_try;

    const double F_s = e.penalty + e.psi;
    res.grad_map_norm = t * std::sqrt(e.dist2);
    res.iters = it + 1;

    if (trace) {
      trace->t_values.push_back(t);
      trace->objectives.push_back(F_s);
      trace->majorization_slack.push_back(psi_y + e.lin + 0.5 * t * e.dist2 -
                                          e.psi);
    }

    if (F_s > Fc) {
      // Momentum reset: the next step is a plain prox-gradient step from the
      // new point, which cannot increase F again.
      tau_c = tau_p = 1.0;
      Xp = e.S;
      if (trace) trace->restarts.push_back(it + 1);
    } else {
      const double tau_n = apg_tau_next(tau_c);
      tau_p = tau_c;
      tau_c = tau_n;
      Xp = std::move(Xc);
    }
    Xc = std::move(e.S);
    Fc = F_s;
    if (res.grad_map_norm <= tol) break;
  }

  res.X = std::move(Xc);
  res.objective = Fc;
  return res;
}

void dual_step(const ProblemSpec& spec, DualState& st, const DualConfig& cfg) {
  const int k = st.outer + 1;
  ApgResult inner = apg_solve(spec, st.y, st.lambda, std::move(st.X),
                              cfg.inner_tol_at(k), cfg.max_inner);
  st.X = std::move(inner.X);
  st.inner_total += inner.iters;

  DualPoint r;  // b - map(X)
  r.z1 = 1.0 - (spec.A.array() * st.X.X1.array()).sum();
  r.Z2 = st.X.X2 - st.X.X1;
  st.y.z1 += st.lambda * r.z1;
  st.y.Z2 += st.lambda * r.Z2;
  st.residual = r.norm();
  st.outer = k;
  st.lambda = std::min(st.lambda * cfg.lambda_growth,
                       cfg.resolved_lambda_max(spec.theta));
}

SolveResult dual_solve(const ProblemSpec& spec, const DualConfig& cfg,
                       const Certifier& certifier) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds_since = [](auto start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  DualState st;
  st.X = PairedVariable::zero(spec.rows(), spec.cols());
  st.y = DualPoint::zero(spec.rows(), spec.cols());
  st.lambda = cfg.resolved_lambda0(spec.theta);

  SolveResult out;
  out.report.stop_reason = StopReason::IterationCap;
  while (st.outer < cfg.max_outer) {
    dual_step(spec, st, cfg);
    if (st.residual <= cfg.eps) {
      out.report.stop_reason = StopReason::Residual;
      break;
    }
    if (certifier && st.outer % cfg.cert_cadence == 0) {
      const auto c0 = std::chrono::steady_clock::now();
      const bool ok = certifier(st.X, st.y.z1);
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
  out.dual = std::move(st.y);
  return out;
}

}  // namespace laros
