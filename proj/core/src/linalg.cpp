#include "laros/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include "laros/errors.hpp"

namespace laros {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entries");
  }
}

namespace {

constexpr int kTallRatio = 3;  // rows > kTallRatio * cols triggers the QR path

// Direct decomposition of a roughly square matrix. BDC is only worthwhile
// beyond Eigen's internal crossover; Jacobi is bit-more-accurate for tiny
// inputs.
SvdResult svd_direct(const Matrix& m) {
  SvdResult out;
  if (m.rows() <= 16 && m.cols() <= 16) {
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = dec.matrixU();
    out.sigma = dec.singularValues();
    out.V = dec.matrixV();
    return out;
  }
  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw NumericError("svd: decomposition did not converge");
  }
  out.U = dec.matrixU();
  out.sigma = dec.singularValues();
  out.V = dec.matrixV();
  return out;
}

bool is_tall(const Matrix& m) {
  return m.rows() > kTallRatio * m.cols() && m.cols() > 1;
}

// Lifts the left factor of a small decomposition back through the QR of the
// tall original: U = Q [U_small; 0]. Applying the Householder sequence to
// just the surviving columns is far cheaper than materializing the thin Q.
Matrix lift_left_factor(const Eigen::HouseholderQR<Matrix>& qr,
                        const Matrix& u_small, Eigen::Index rows) {
  Matrix padded = Matrix::Zero(rows, u_small.cols());
  padded.topRows(u_small.rows()) = u_small;
  return qr.householderQ() * padded;
}

}  // namespace

SvdResult svd(const Matrix& m, int top_k) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("svd: empty matrix");
  require_finite(m, "svd");

  SvdResult out;
  const Eigen::Index rows = m.rows(), cols = m.cols();
  if (cols > kTallRatio * rows && rows > 1) {
    // Wide: decompose the transpose and swap the factors.
    SvdResult t = svd(m.transpose(), top_k);
    out.U = std::move(t.V);
    out.sigma = std::move(t.sigma);
    out.V = std::move(t.U);
    return out;
  }
  if (is_tall(m)) {
    // Tall: m = Q R, then the SVD of the small triangular factor.
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix r = qr.matrixQR()
                   .topRows(cols)
                   .template triangularView<Eigen::Upper>();
    SvdResult small = svd_direct(r);
    const Eigen::Index k =
        (top_k > 0 && top_k < small.sigma.size()) ? top_k : small.sigma.size();
    out.U = lift_left_factor(qr, small.U.leftCols(k), rows);
    out.sigma = small.sigma.head(k);
    out.V = small.V.leftCols(k);
    return out;
  }

  out = svd_direct(m);
  if (top_k > 0 && top_k < out.sigma.size()) {
    out.U = out.U.leftCols(top_k).eval();
    out.sigma = out.sigma.head(top_k).eval();
    out.V = out.V.leftCols(top_k).eval();
  }
  return out;
}

double spectral_norm(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("svd: empty matrix");
  require_finite(m, "spectral_norm");
  // Values only; no singular vectors are formed.
  const Matrix* work = &m;
  Matrix t;
  if (m.cols() > kTallRatio * m.rows() && m.rows() > 1) {
    t = m.transpose();
    work = &t;
  }
  if (is_tall(*work)) {
    Eigen::HouseholderQR<Matrix> qr(*work);
    Matrix r = qr.matrixQR()
                   .topRows(work->cols())
                   .template triangularView<Eigen::Upper>();
    return Eigen::JacobiSVD<Matrix>(r).singularValues()(0);
  }
  if (work->rows() <= 16 && work->cols() <= 16) {
    return Eigen::JacobiSVD<Matrix>(*work).singularValues()(0);
  }
  return Eigen::BDCSVD<Matrix>(*work).singularValues()(0);
}

ProxNuclearResult prox_nuclear_ex(const Matrix& m, double tau) {
  if (tau < 0) throw InvalidInput("prox_nuclear: negative threshold");
  ProxNuclearResult out;
  if (m.isZero(0.0)) {
    out.P = Matrix::Zero(m.rows(), m.cols());
    return out;
  }
  if (m.cols() > kTallRatio * m.rows() && m.rows() > 1) {
    // The nuclear norm is transpose invariant, so shrink the transpose.
    ProxNuclearResult t = prox_nuclear_ex(m.transpose(), tau);
    out.P = t.P.transpose();
    out.nuclear_norm = t.nuclear_norm;
    out.rank = t.rank;
    return out;
  }

  require_finite(m, "prox_nuclear");
  const Eigen::Index rows = m.rows(), cols = m.cols();
  if (is_tall(m)) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix r = qr.matrixQR()
                   .topRows(cols)
                   .template triangularView<Eigen::Upper>();
    SvdResult small = svd_direct(r);
    Eigen::Index keep = 0;
    while (keep < small.sigma.size() && small.sigma(keep) > tau) ++keep;
    if (keep == 0) {
      out.P = Matrix::Zero(rows, cols);
      return out;
    }
    Vector shrunk = small.sigma.head(keep).array() - tau;
    Matrix u = lift_left_factor(qr, small.U.leftCols(keep), rows);
    out.P = u * shrunk.asDiagonal() * small.V.leftCols(keep).transpose();
    out.nuclear_norm = shrunk.sum();
    out.rank = static_cast<int>(keep);
    return out;
  }

  SvdResult dec = svd_direct(m);
  Eigen::Index keep = 0;
  while (keep < dec.sigma.size() && dec.sigma(keep) > tau) ++keep;
  if (keep == 0) {
    out.P = Matrix::Zero(rows, cols);
    return out;
  }
  Vector shrunk = dec.sigma.head(keep).array() - tau;
  out.P = dec.U.leftCols(keep) * shrunk.asDiagonal() *
          dec.V.leftCols(keep).transpose();
  out.nuclear_norm = shrunk.sum();
  out.rank = static_cast<int>(keep);
  return out;
}

Matrix prox_nuclear(const Matrix& m, double tau) {
  return prox_nuclear_ex(m, tau).P;
}

Matrix prox_l1(const Matrix& m, double tau) {
  if (tau < 0) throw InvalidInput("prox_l1: negative threshold");
  require_finite(m, "prox_l1");
  return (m.array().sign() * (m.array().abs() - tau).max(0.0)).matrix();
}

RankOne rank_one_approx(const Matrix& m) {
  SvdResult dec = svd(m, 1);
  RankOne out;
  out.sigma = dec.sigma(0);
  if (out.sigma <= 0.0) throw NumericError("rank_one_approx: zero matrix");
  out.u = dec.U.col(0);
  out.v = dec.V.col(0);
  Eigen::Index imax = 0;
  out.u.cwiseAbs().maxCoeff(&imax);
  if (out.u(imax) < 0) {
    out.u = -out.u;
    out.v = -out.v;
  }
  return out;
}

}  // namespace laros
