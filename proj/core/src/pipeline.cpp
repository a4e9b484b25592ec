#include "laros/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>
#include <utility>

#include "laros/errors.hpp"

namespace laros {

namespace {

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

void append_range(std::vector<double>& grid, double lo, double hi, int count) {
  for (int i = 0; i < count; ++i) {
    grid.push_back(lo + (hi - lo) * i / (count - 1));
  }
}

// Measures one converged solve against the original (unscaled) matrix.
void fill_curve_point(const Matrix& A, const SupportPattern& support,
                      LCurvePoint& pt) {
  const Matrix block = submatrix(A, support.rows, support.cols);
  RankOne top = rank_one_approx(block);
  pt.largeness = top.sigma;  // ||sigma u v^T||_F of unit singular vectors
  pt.averaging = (block - top.sigma * top.u * top.v.transpose()).norm();
  pt.support = support;
  pt.ok = true;
}

}  // namespace

void ExtractionConfig::validate() const {
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    if (!(theta_grid[i] > 0.0) || !std::isfinite(theta_grid[i])) {
      throw InvalidInput("extraction config: grid values must be positive");
    }
    if (i > 0 && theta_grid[i] <= theta_grid[i - 1]) {
      throw InvalidInput("extraction config: grid must be strictly ascending");
    }
  }
  if (max_features < 1) {
    throw InvalidInput("extraction config: max_features must be >= 1");
  }
  if (jobs < 1) throw InvalidInput("extraction config: jobs must be >= 1");
  if (zero_averaging_tol < 0.0) {
    throw InvalidInput("extraction config: negative zero_averaging_tol");
  }
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  append_range(grid, 0.01, 0.1, 10);
  append_range(grid, 0.1, 1.0, 10);
  append_range(grid, 1.0, 10.0, 10);
  std::sort(grid.begin(), grid.end());
  // The range endpoints meet; drop values that agree up to rounding noise.
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) {
                           return std::abs(a - b) <= 1e-12 * std::max(1.0, b);
                         }),
             grid.end());
  return grid;
}

std::vector<LCurvePoint> sweep_theta(const Matrix& A,
                                     const ExtractionConfig& cfg) {
  cfg.validate();
  if (A.rows() < 1 || A.cols() < 1 || A.isZero(0.0)) {
    throw InvalidInput("sweep_theta: matrix is zero");
  }
  require_finite(A, "sweep_theta");
  const std::vector<double> grid =
      cfg.theta_grid.empty() ? default_theta_grid() : cfg.theta_grid;

  // Solves run against the unit-spectral-norm rescaling; supports are scale
  // invariant and the curve measures come from the original values.
  const Matrix scaled = A / spectral_norm(A);

  std::vector<LCurvePoint> pts(grid.size());
  auto run_one = [&](std::size_t i) {
    LCurvePoint& pt = pts[i];
    pt.theta = grid[i];
    try {
      ProblemSpec spec(scaled, grid[i]);
      Certifier certifier;
      if (cfg.use_certifier) certifier = make_certifier(spec, cfg.certify);
      SolveResult sr = cfg.algo == Algo::Dual
                           ? dual_solve(spec, cfg.dual, certifier)
                           : primal_solve(spec, cfg.primal, certifier);
      pt.report = sr.report;
      if (sr.report.stop_reason == StopReason::IterationCap) return;
      SupportPattern support =
          extract_support(sr.X.X2, cfg.certify.support_threshold);
      fill_curve_point(A, support, pt);
    } catch (const std::exception&) {
      pt.ok = false;
    }
  };

  if (cfg.jobs <= 1 || grid.size() <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_one(i);
    return pts;
  }
  std::atomic<std::size_t> next{0};
  const int workers = static_cast<int>(
      std::min(static_cast<std::size_t>(cfg.jobs), grid.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < grid.size();
           i = next.fetch_add(1)) {
        run_one(i);
      }
    });
  }
  for (auto& th : pool) th.join();
  return pts;
}

int select_theta(const std::vector<LCurvePoint>& pts, double zero_averaging_tol) {
  std::vector<int> valid;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (pts[i].ok) valid.push_back(i);
  }
  if (valid.empty()) throw NumericError("select_theta: no usable points");

  // Exact-fit shortcut: any rank-one block wins outright, the largest first,
  // the smallest theta on ties.
  int best = -1;
  for (int i : valid) {
    const bool exact =
        pts[i].averaging <= zero_averaging_tol * (1.0 + pts[i].largeness);
    if (exact && (best < 0 || pts[i].largeness > pts[best].largeness)) best = i;
  }
  if (best >= 0) return best;

  // Discrete curvature of the trade-off polyline: the turn angle at each
  // interior vertex. Endpoints count as flat, so an interior vertex must
  // turn by a strictly positive angle to displace the smallest theta.
  double best_curv = 0.0;
  best = valid.front();
  for (std::size_t k = 1; k + 1 < valid.size(); ++k) {
    const LCurvePoint& p0 = pts[valid[k - 1]];
    const LCurvePoint& p1 = pts[valid[k]];
    const LCurvePoint& p2 = pts[valid[k + 1]];
    const double ax = p0.largeness - p1.largeness, ay = p0.averaging - p1.averaging;
    const double bx = p2.largeness - p1.largeness, by = p2.averaging - p1.averaging;
    const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
    double curv = 0.0;
    if (na > 0.0 && nb > 0.0) {
      const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
      curv = std::numbers::pi - std::acos(c);
    }
    // Collinear points evaluate to turn angles near sqrt(machine epsilon),
    // not zero, so angles this close count as ties and keep the earlier
    // (smaller) theta.
    if (curv > best_curv + 1e-6) {
      best_curv = curv;
      best = valid[k];
    }
  }
  return best;
}

Feature extract_next_feature(const Matrix& A, const ExtractionConfig& cfg,
                             std::vector<LCurvePoint>* sweep_out) {
  std::vector<LCurvePoint> pts = sweep_theta(A, cfg);
  if (sweep_out) *sweep_out = pts;
  const int idx = select_theta(pts, cfg.zero_averaging_tol);
  const LCurvePoint& pt = pts[idx];

  Feature f;
  f.support = pt.support;
  f.theta = pt.theta;
  f.solver = pt.report;
  f.size_pixels = static_cast<int>(pt.support.rows.size());
  f.image_count = static_cast<int>(pt.support.cols.size());

  const Matrix block = submatrix(A, pt.support.rows, pt.support.cols);
  RankOne top = rank_one_approx(block);
  if (top.v.maxCoeff() < -top.v.minCoeff()) {
    top.u = -top.u;
    top.v = -top.v;
  }
  const double vmax = top.v.maxCoeff();
  if (!(vmax > 0.0)) {
    throw NumericError("extract_next_feature: degenerate significance vector");
  }
  f.sigma = top.sigma;
  f.v = (top.v / vmax).cwiseMax(0.0).cwiseMin(1.0);
  f.u = top.sigma * vmax * top.u;
  f.f_min = f.v.minCoeff();
  return f;
}

Matrix deflate(Matrix A, const SupportPattern& support) {
  for (int r : support.rows) {
    if (r < 0 || r >= A.rows()) throw InvalidInput("deflate: row out of range");
  }
  for (int c : support.cols) {
    if (c < 0 || c >= A.cols()) throw InvalidInput("deflate: column out of range");
  }
  for (int r : support.rows) {
    for (int c : support.cols) A(r, c) = 0.0;
  }
  return A;
}

Matrix negative_transform(const Matrix& A, double scale) {
  require_finite(A, "negative_transform");
  if (A.size() > 0 && (A.minCoeff() < 0.0 || A.maxCoeff() > scale)) {
    throw InvalidInput("negative_transform: entries outside [0, scale]");
  }
  return Matrix::Constant(A.rows(), A.cols(), scale) - A;
}

Vector negative_feature_values(const Vector& u, double scale) {
  return Vector::Constant(u.size(), scale) - u;
}

ExtractionResult run_extraction(Matrix A, const ExtractionConfig& cfg) {
  cfg.validate();
  if (A.rows() < 1 || A.cols() < 1) {
    throw InvalidInput("run_extraction: empty matrix");
  }
  ExtractionResult out;
  while (static_cast<int>(out.features.size()) < cfg.max_features) {
    if (A.isZero(0.0)) break;
    Feature f;
    std::vector<LCurvePoint> sweep;
    try {
      f = extract_next_feature(A, cfg, &sweep);
    } catch (const NumericError&) {
      break;  // nothing usable left
    }
    A = deflate(std::move(A), f.support);
    out.features.push_back(std::move(f));
    out.sweeps.push_back(std::move(sweep));
  }
  return out;
}

}  // namespace laros
