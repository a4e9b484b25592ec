#pragma once

#include "laros/matrix.hpp"

namespace laros {

// Thin singular value decomposition, m = U * diag(sigma) * V^T.
struct SvdResult {
  Matrix U;      // rows x r, orthonormal columns
  Vector sigma;  // r, nonnegative, non-increasing
  Matrix V;      // cols x r, orthonormal columns
};

// r = min(rows, cols), or top_k leading triples when 0 < top_k < min(rows,
// cols). Strongly rectangular inputs are reduced by a Householder QR of the
// (transposed) matrix first, which is much cheaper than a direct
// decomposition when rows >> cols or cols >> rows.
SvdResult svd(const Matrix& m, int top_k = -1);

double spectral_norm(const Matrix& m);

// argmin_P ||P||_* + 1/(2 tau) ||P - m||_F^2: soft-thresholds the singular
// values, U * diag(max(sigma - tau, 0)) * V^T. An exactly zero input returns
// zero without touching the SVD kernel.
Matrix prox_nuclear(const Matrix& m, double tau);

// prox_nuclear plus the nuclear norm and rank of the result, read off the
// thresholded singular values. Solvers evaluating the objective after every
// prox step use this to avoid a second decomposition, and the strongly
// rectangular path only rotates the surviving singular vectors back to full
// height (a large saving when few singular values exceed tau).
struct ProxNuclearResult {
  Matrix P;
  double nuclear_norm = 0.0;
  int rank = 0;
};
ProxNuclearResult prox_nuclear_ex(const Matrix& m, double tau);

// argmin_P ||P||_1 + 1/(2 tau) ||P - m||_F^2: entrywise shrinkage
// sgn(m) .* max(|m| - tau, 0).
Matrix prox_l1(const Matrix& m, double tau);

// Leading singular triple with a fixed sign convention: the
// largest-magnitude entry of u is nonnegative (v is flipped along with u).
struct RankOne {
  double sigma = 0.0;
  Vector u, v;  // unit vectors
};
RankOne rank_one_approx(const Matrix& m);

}  // namespace laros
