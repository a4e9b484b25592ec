#include "laros/certificate.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "laros/errors.hpp"

namespace laros {

namespace {

std::vector<int> complement(const std::vector<int>& picked, int total) {
  std::vector<int> rest;
  rest.reserve(total - static_cast<int>(picked.size()));
  std::size_t at = 0;
  for (int i = 0; i < total; ++i) {
    if (at < picked.size() && picked[at] == i) {
      ++at;
    } else {
      rest.push_back(i);
    }
  }
  return rest;
}

Vector pack(const CandidateTriple& x) {
  Vector out(1 + x.u1.size() + x.v1.size());
  out(0) = x.lambda;
  out.segment(1, x.u1.size()) = x.u1;
  out.tail(x.v1.size()) = x.v1;
  return out;
}

CandidateTriple unpack(const Vector& xv, Eigen::Index m, Eigen::Index n) {
  CandidateTriple x;
  x.lambda = xv(0);
  x.u1 = xv.segment(1, m);
  x.v1 = xv.tail(n);
  return x;
}

void require_triple_dims(const Matrix& A11, const CandidateTriple& x,
                         const char* what) {
  if (x.u1.size() != A11.rows() || x.v1.size() != A11.cols()) {
    throw InvalidInput(std::string(what) + ": triple does not match the block");
  }
}

Matrix submatrix(const Matrix& A, const std::vector<int>& rows,
                 const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(i, j) = A(rows[i], cols[j]);
    }
  }
  return out;
}

double max_abs_or_zero(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

SupportPattern extract_support(const Matrix& X2, double rel_threshold) {
  if (!(rel_threshold > 0.0)) {
    throw InvalidInput("extract_support: threshold must be positive");
  }
  require_finite(X2, "extract_support");
  const double peak = max_abs_or_zero(X2);
  if (peak <= 0.0) throw InvalidInput("extract_support: empty support");
  const double cut = rel_threshold * peak;

  SupportPattern out;
  std::vector<char> row_hit(X2.rows(), 0), col_hit(X2.cols(), 0);
  for (Eigen::Index j = 0; j < X2.cols(); ++j) {
    for (Eigen::Index i = 0; i < X2.rows(); ++i) {
      if (std::abs(X2(i, j)) > cut) {
        row_hit[i] = 1;
        col_hit[j] = 1;
      }
    }
  }
  for (int i = 0; i < static_cast<int>(row_hit.size()); ++i) {
    if (row_hit[i]) out.rows.push_back(i);
  }
  for (int j = 0; j < static_cast<int>(col_hit.size()); ++j) {
    if (col_hit[j]) out.cols.push_back(j);
  }
  if (out.rows.empty() || out.cols.empty()) {
    throw InvalidInput("extract_support: empty support");
  }
  out.row_order = out.rows;
  for (int i : complement(out.rows, static_cast<int>(X2.rows()))) {
    out.row_order.push_back(i);
  }
  out.col_order = out.cols;
  for (int j : complement(out.cols, static_cast<int>(X2.cols()))) {
    out.col_order.push_back(j);
  }
  return out;
}

Vector newton_residual(const Matrix& A11, double theta, const CandidateTriple& x) {
  require_triple_dims(A11, x, "newton_residual");
  const Matrix B = x.lambda * A11 - Matrix::Constant(A11.rows(), A11.cols(), theta);
  Vector out(A11.rows() + A11.cols() + 1);
  out.head(A11.rows()) = B * x.v1 - x.u1;
  out.segment(A11.rows(), A11.cols()) = B.transpose() * x.u1 - x.v1;
  out(out.size() - 1) = x.u1.squaredNorm() - 1.0;
  return out;
}

Matrix newton_jacobian(const Matrix& A11, double theta, const CandidateTriple& x) {
  require_triple_dims(A11, x, "newton_jacobian");
  const Eigen::Index m = A11.rows(), n = A11.cols();
  const Matrix B = x.lambda * A11 - Matrix::Constant(m, n, theta);
  Matrix J = Matrix::Zero(m + n + 1, m + n + 1);
  J.block(0, 0, m, 1) = A11 * x.v1;
  J.block(0, 1, m, m) = -Matrix::Identity(m, m);
  J.block(0, 1 + m, m, n) = B;
  J.block(m, 0, n, 1) = A11.transpose() * x.u1;
  J.block(m, 1, n, m) = B.transpose();
  J.block(m, 1 + m, n, n) = -Matrix::Identity(n, n);
  J.block(m + n, 1, 1, m) = 2.0 * x.u1.transpose();
  return J;
}

NewtonResult newton_solve(const Matrix& A11, double theta, CandidateTriple x0,
                          double eps_s, int max_iters) {
  require_triple_dims(A11, x0, "newton_solve");
  const Eigen::Index m = A11.rows(), n = A11.cols();
  Vector xv = pack(x0);
  NewtonResult out;
  for (int it = 0; it < max_iters; ++it) {
    CandidateTriple cur = unpack(xv, m, n);
    Vector F = newton_residual(A11, theta, cur);
    out.residual_norm = F.norm();
    if (out.residual_norm <= eps_s) break;
    Eigen::FullPivLU<Matrix> lu(newton_jacobian(A11, theta, cur));
    if (!lu.isInvertible()) {
      throw NumericError("newton_solve: singular Jacobian");
    }
    Vector step = lu.solve(-F);
    xv += step;
    out.last_step_norm = step.norm();
    out.iters = it + 1;
  }
  out.x = unpack(xv, m, n);
  out.residual_norm = newton_residual(A11, theta, out.x).norm();
  if (out.residual_norm > eps_s) {
    throw NumericError("newton_solve: no convergence within the iteration cap");
  }
  // Accuracy of the refined triple: the convergence-theorem bound at the
  // refined point when it applies, the last step length otherwise.
  KantorovichReport kr = kantorovich_check(A11, theta, out.x);
  out.x.eps = std::max(kr.passed ? kr.t_star : out.last_step_norm, 1e-12);
  return out;
}

KantorovichReport kantorovich_check(const Matrix& A11, double theta,
                                    const CandidateTriple& x0) {
  require_triple_dims(A11, x0, "kantorovich_check");
  const Matrix J = newton_jacobian(A11, theta, x0);
  Eigen::JacobiSVD<Matrix> dec(J);
  const double sigma_min = dec.singularValues()(dec.singularValues().size() - 1);
  if (!(sigma_min > 0.0)) {
    throw NumericError("kantorovich_check: singular Jacobian");
  }
  KantorovichReport out;
  out.B = 1.0 / sigma_min;
  Eigen::FullPivLU<Matrix> lu(J);
  if (!lu.isInvertible()) {
    throw NumericError("kantorovich_check: singular Jacobian");
  }
  out.eta = lu.solve(newton_residual(A11, theta, x0)).norm();
  out.K = 2.0 * std::sqrt(std::pow(spectral_norm(A11), 2) + 1.0);
  out.h = out.B * out.K * out.eta;
  out.passed = out.h <= 0.5;
  if (out.passed) {
    // Algebraically (1 - sqrt(1 - 2h)) / h * eta, in the form that stays
    // finite as h -> 0.
    out.t_star = 2.0 * out.eta / (1.0 + std::sqrt(1.0 - 2.0 * out.h));
  }
  return out;
}

Vector knapsack_project(const Vector& w_bar, const Vector& u, const Vector& lo,
                        const Vector& hi) {
  const Eigen::Index n = w_bar.size();
  if (u.size() != n || lo.size() != n || hi.size() != n) {
    throw InvalidInput("knapsack_project: size mismatch");
  }
  if ((lo.array() > hi.array()).any()) {
    throw NumericError("knapsack_project: inconsistent box");
  }
  auto clip = [&](double mu) -> Vector {
    return (w_bar - mu * u).cwiseMax(lo).cwiseMin(hi);
  };
  auto g = [&](double mu) { return u.dot(clip(mu)); };

  if (u.isZero(0.0)) return clip(0.0);

  // g is continuous, piecewise linear, and non-increasing in mu; beyond the
  // extreme breakpoints every coordinate is pinned, so these are the limits.
  double g_left = 0.0, g_right = 0.0;  // mu -> -inf / +inf
  for (Eigen::Index i = 0; i < n; ++i) {
    g_left += u(i) * (u(i) > 0 ? hi(i) : lo(i));
    g_right += u(i) * (u(i) > 0 ? lo(i) : hi(i));
  }
  if (g_right > 0.0 || g_left < 0.0) {
    throw NumericError("knapsack_project: hyperplane outside the box");
  }

  std::vector<double> bp;
  bp.reserve(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u(i) == 0.0) continue;
    bp.push_back((w_bar(i) - lo(i)) / u(i));
    bp.push_back((w_bar(i) - hi(i)) / u(i));
  }
  std::sort(bp.begin(), bp.end());

  // Smallest breakpoint with g <= 0; g is evaluated exactly, so the root
  // segment bracketing is exact and the final interpolation is exact for a
  // linear segment.
  std::size_t ilo = 0, ihi = bp.size();
  while (ilo < ihi) {
    std::size_t mid = ilo + (ihi - ilo) / 2;
    if (g(bp[mid]) <= 0.0) {
      ihi = mid;
    } else {
      ilo = mid + 1;
    }
  }
  double mu;
  if (ilo == 0) {
    mu = bp.front();  // g constant left of the first breakpoint, so it is 0
  } else if (ilo == bp.size()) {
    mu = bp.back();  // g(+inf) <= 0 puts the root at the last breakpoint
  } else {
    const double a = bp[ilo - 1], b = bp[ilo];
    const double ga = g(a), gb = g(b);
    mu = (ga > gb) ? a + (b - a) * ga / (ga - gb) : a;
  }
  return clip(mu);
}

double CertificateFrame::delta12() const {
  return theta - (max_abs_or_zero(A12) + 5.0) * eps;
}

double CertificateFrame::delta21() const {
  return theta - (max_abs_or_zero(A21) + 5.0) * eps;
}

Matrix project_certificate(const Matrix& W, const CertificateFrame& frame) {
  const Eigen::Index m1 = frame.A11.rows(), n1 = frame.A11.cols();
  const Eigen::Index m2 = frame.A21.rows(), n2 = frame.A12.cols();
  if (W.rows() != m1 + m2 || W.cols() != n1 + n2) {
    throw InvalidInput("project_certificate: frame size mismatch");
  }
  Matrix out = W;
  out.topLeftCorner(m1, n1) =
      frame.lambda * frame.A11 - Matrix::Constant(m1, n1, frame.theta) -
      frame.u1 * frame.v1.transpose();
  if (n2 > 0) {
    const double d = frame.delta12();
    if (d < 0.0) {
      throw NumericError("project_certificate: negative margin on the (1,2) box");
    }
    for (Eigen::Index j = 0; j < n2; ++j) {
      const Vector center = frame.lambda * frame.A12.col(j);
      out.col(n1 + j).head(m1) =
          knapsack_project(W.col(n1 + j).head(m1), frame.u1,
                           (center.array() - d).matrix(),
                           (center.array() + d).matrix());
    }
  }
  if (m2 > 0) {
    const double d = frame.delta21();
    if (d < 0.0) {
      throw NumericError("project_certificate: negative margin on the (2,1) box");
    }
    for (Eigen::Index i = 0; i < m2; ++i) {
      const Vector center = frame.lambda * frame.A21.row(i).transpose();
      out.row(m1 + i).head(n1) =
          knapsack_project(W.row(m1 + i).head(n1).transpose(), frame.v1,
                           (center.array() - d).matrix(),
                           (center.array() + d).matrix())
              .transpose();
    }
  }
  if (m2 > 0 && n2 > 0) {
    const Matrix center = frame.lambda * frame.A22;
    out.bottomRightCorner(m2, n2) =
        W.bottomRightCorner(m2, n2)
            .cwiseMin((center.array() + frame.theta).matrix())
            .cwiseMax((center.array() - frame.theta).matrix());
  }
  return out;
}

Matrix spectral_subgradient(const Matrix& W) {
  RankOne top = rank_one_approx(W);
  return top.u * top.v.transpose();
}

namespace {

struct PermutedFrame {
  CertificateFrame frame;
  Matrix A;  // full matrix in the permuted order
};

PermutedFrame build_frame(const ProblemSpec& spec, const SupportPattern& s) {
  PermutedFrame out;
  out.A = submatrix(spec.A, s.row_order, s.col_order);
  const int m1 = static_cast<int>(s.rows.size());
  const int n1 = static_cast<int>(s.cols.size());
  out.frame.A11 = out.A.topLeftCorner(m1, n1);
  out.frame.A12 = out.A.topRightCorner(m1, out.A.cols() - n1);
  out.frame.A21 = out.A.bottomLeftCorner(out.A.rows() - m1, n1);
  out.frame.A22 = out.A.bottomRightCorner(out.A.rows() - m1, out.A.cols() - n1);
  out.frame.theta = spec.theta;
  return out;
}

// Slack of each optimality condition at W (see CertificateResult). An
// equality residual within tol counts as satisfied and the box slack is
// reported; otherwise the margin is the negated residual.
std::array<double, 5> measure_margins(const Matrix& W,
                                      const CertificateFrame& frame,
                                      double target) {
  constexpr double kEqTol = 1e-10;
  const Eigen::Index m1 = frame.A11.rows(), n1 = frame.A11.cols();
  const Eigen::Index m2 = frame.A21.rows(), n2 = frame.A12.cols();
  std::array<double, 5> out{};

  const Matrix fixed = frame.lambda * frame.A11 -
                       Matrix::Constant(m1, n1, frame.theta) -
                       frame.u1 * frame.v1.transpose();
  out[0] = -max_abs_or_zero(W.topLeftCorner(m1, n1) - fixed);

  if (n2 > 0) {
    const Matrix dev =
        W.topRightCorner(m1, n2) - frame.lambda * frame.A12;
    const double eq =
        (frame.u1.transpose() * W.topRightCorner(m1, n2)).cwiseAbs().maxCoeff();
    out[1] = eq <= kEqTol ? frame.delta12() - max_abs_or_zero(dev) : -eq;
  } else {
    out[1] = frame.delta12();
  }
  if (m2 > 0) {
    const Matrix dev =
        W.bottomLeftCorner(m2, n1) - frame.lambda * frame.A21;
    const double eq =
        (W.bottomLeftCorner(m2, n1) * frame.v1).cwiseAbs().maxCoeff();
    out[2] = eq <= kEqTol ? frame.delta21() - max_abs_or_zero(dev) : -eq;
  } else {
    out[2] = frame.delta21();
  }
  if (m2 > 0 && n2 > 0) {
    out[3] = frame.theta -
             max_abs_or_zero(W.bottomRightCorner(m2, n2) - frame.lambda * frame.A22);
  } else {
    out[3] = frame.theta;
  }
  out[4] = target - (W.isZero(0.0) ? 0.0 : spectral_norm(W));
  return out;
}

}  // namespace

CertificateResult certify(const ProblemSpec& spec, const PairedVariable& X,
                          const CertifyConfig& cfg) {
  if (X.X1.rows() != spec.rows() || X.X1.cols() != spec.cols() ||
      X.X2.rows() != spec.rows() || X.X2.cols() != spec.cols()) {
    throw InvalidInput("certify: variable shape does not match the problem");
  }
  CertificateResult res;
  try {
    res.support = extract_support(X.X2, cfg.support_threshold);
  } catch (const InvalidInput&) {
    res.note = "no support to certify";
    return res;
  }

  const int dim = static_cast<int>(res.support.rows.size() +
                                   res.support.cols.size()) + 1;
  if (dim > cfg.max_refine_dim) {
    res.note = "support too large to refine";
    return res;
  }

  PermutedFrame pf = build_frame(spec, res.support);
  CertificateFrame& frame = pf.frame;

  Matrix block = submatrix(X.X2, res.support.rows, res.support.cols);
  CandidateTriple x0;
  try {
    RankOne top = rank_one_approx(block);
    x0.u1 = top.u;
    x0.v1 = top.v;
  } catch (const NumericError&) {
    res.note = "support block has no leading direction";
    return res;
  }
  x0.lambda = cfg.lambda_hint > 0.0 ? cfg.lambda_hint : pair_objective(spec, X);

  try {
    res.kantorovich = kantorovich_check(frame.A11, spec.theta, x0);
  } catch (const NumericError&) {
    res.note = "singular Jacobian at the Newton start";
    return res;
  }
  if (!res.kantorovich.passed) {
    res.note = "Newton start outside the convergence basin";
    return res;
  }
  try {
    NewtonResult nr = newton_solve(frame.A11, spec.theta, x0, cfg.eps_s,
                                   cfg.newton_max_iters);
    res.triple = nr.x;
  } catch (const NumericError&) {
    res.note = "Newton refinement failed";
    return res;
  }
  if (!(res.triple.lambda > 0.0)) {
    res.note = "refined multiplier not positive";
    return res;
  }
  if (res.triple.eps >= 0.5) {
    res.note = "triple accuracy too coarse";
    return res;
  }

  frame.u1 = res.triple.u1;
  frame.v1 = res.triple.v1;
  frame.lambda = res.triple.lambda;
  frame.eps = res.triple.eps;

  const double target = 1.0 - (spec.a_norm2 + 7.5) * frame.eps;
  const Eigen::Index mr = spec.rows(), nc = spec.cols();
  if (frame.delta12() < 0.0 || frame.delta21() < 0.0) {
    res.W = Matrix::Zero(mr, nc);
    res.spectral = 0.0;
    res.margins = measure_margins(res.W, frame, target);
    res.note = "triple accuracy leaves no box for the off-diagonal blocks";
    return res;
  }

  Matrix W = project_certificate(Matrix::Zero(mr, nc), frame);
  double best = W.isZero(0.0) ? 0.0 : spectral_norm(W);
  Matrix best_W = W;
  double cur = best;
  res.spectral_trace.push_back(cur);
  std::vector<double> best_history{best};

  if (target >= 0.0) {
    for (int k = 1; k <= cfg.subgrad_max_iters && best > target; ++k) {
      if (cur <= 0.0) break;
      const double alpha = cfg.subgrad_step0 / std::sqrt(static_cast<double>(k));
      W = project_certificate(W - alpha * spectral_subgradient(W), frame);
      cur = spectral_norm(W);
      res.spectral_trace.push_back(cur);
      res.subgrad_iters = k;
      if (cur < best) {
        best = cur;
        best_W = W;
      }
      best_history.push_back(best);
      const int lag = static_cast<int>(best_history.size()) - 1 - cfg.stall_window;
      if (lag >= 0 && best_history[lag] - best < cfg.stall_improvement) {
        res.note = "witness search stalled";
        break;
      }
    }
  } else {
    res.note = "spectral target is empty";
  }

  res.W = std::move(best_W);
  res.spectral = best;
  res.margins = measure_margins(res.W, frame, target);
  res.certified = true;
  for (double m : res.margins) res.certified = res.certified && m >= 0.0;
  if (!res.certified && res.note.empty()) {
    res.note = "no witness within the spectral target";
  }
  return res;
}

Certifier make_certifier(const ProblemSpec& spec, CertifyConfig cfg,
                         std::shared_ptr<CertificateResult> sink) {
  return [spec, cfg, sink](const PairedVariable& X, double lambda_hint) {
    CertifyConfig local = cfg;
    if (local.lambda_hint <= 0.0) local.lambda_hint = lambda_hint;
    CertificateResult r = certify(spec, X, local);
    const bool ok = r.certified;
    if (sink) *sink = std::move(r);
    return ok;
  };
}

}  // namespace laros
