#pragma once

#include <vector>

#include "laros/certificate.hpp"
#include "laros/dual_ppa.hpp"
#include "laros/primal_ppa.hpp"

namespace laros {

enum class Algo { Primal, Dual };

// One theta sample of the trade-off curve. X(M,N) is the rank-one
// approximation of the support block A(M,N) of the original matrix:
// largeness = ||X(M,N)||_F measures how much signal the block carries,
// averaging = ||A(M,N) - X(M,N)||_F how far the block is from rank one.
struct LCurvePoint {
  double theta = 0.0;
  double largeness = 0.0;
  double averaging = 0.0;
  SupportPattern support;
  bool ok = false;  // solver produced a usable support
  SolveReport report;
};

struct ExtractionConfig {
  std::vector<double> theta_grid;  // empty selects default_theta_grid()
  Algo algo = Algo::Dual;
  DualConfig dual;
  PrimalConfig primal;
  bool use_certifier = true;
  CertifyConfig certify;
  int max_features = 16;
  int jobs = 1;  // theta sweep parallelism; results are merged in grid order
  double zero_averaging_tol = 1e-10;  // "averaging == 0" test, relative

  void validate() const;
};

// 10 uniform values in each of [0.01, 0.1], [0.1, 1], [1, 10], duplicates at
// the shared endpoints removed (28 ascending values).
std::vector<double> default_theta_grid();

// Solves the program for every theta in the grid against A scaled to unit
// spectral norm (supports are scale invariant; largeness/averaging are
// computed from the original values). Grid-order deterministic regardless of
// cfg.jobs.
std::vector<LCurvePoint> sweep_theta(const Matrix& A, const ExtractionConfig& cfg);

// Index of the selected point among the usable ones. If any point has
// averaging == 0 (up to zero_averaging_tol), the smallest theta among those
// of maximal largeness wins; otherwise the point of maximal discrete
// curvature of the (largeness, averaging) polyline (three-point angle
// formula, endpoints get curvature 0), ties broken toward smaller theta.
// Throws NumericError when every point failed.
int select_theta(const std::vector<LCurvePoint>& pts,
                 double zero_averaging_tol = 1e-10);

// One extracted feature: the support block of A factored as u v^T with v
// normalized so max(v) = 1. u carries pixel intensities, v says how
// significant the feature is in each member image.
struct Feature {
  SupportPattern support;  // rows index pixels, cols index images
  Vector u, v;
  double sigma = 0.0;      // leading singular value of the support block
  double theta = 0.0;      // selected trade-off weight
  int size_pixels = 0;     // |rows|
  int image_count = 0;     // |cols|
  double f_min = 0.0;      // min significance over the member images
  SolveReport solver;
};

// Sweep, select, and package the winning support as a Feature. Throws
// NumericError when no theta yields a usable support or the block is
// degenerate. When sweep_out is non-null it receives the full curve.
Feature extract_next_feature(const Matrix& A, const ExtractionConfig& cfg,
                             std::vector<LCurvePoint>* sweep_out = nullptr);

// Zeroes the support block, leaving the rest untouched.
Matrix deflate(Matrix A, const SupportPattern& support);

// B = scale * ones - A, for extracting dark features from bright images.
// Requires entries in [0, scale].
Matrix negative_transform(const Matrix& A, double scale = 255.0);
// Maps an extracted feature's intensities back to the original frame.
Vector negative_feature_values(const Vector& u, double scale = 255.0);

struct ExtractionResult {
  std::vector<Feature> features;
  std::vector<std::vector<LCurvePoint>> sweeps;  // one curve per feature round
};

// Repeats extract-and-deflate until max_features, a zero residual matrix, or
// a round with no usable feature.
ExtractionResult run_extraction(Matrix A, const ExtractionConfig& cfg);

}  // namespace laros
