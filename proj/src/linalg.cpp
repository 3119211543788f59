#include "unionrec/linalg.hpp"

#include <cmath>
#include <string>

#include "unionrec/errors.hpp"

namespace unionrec::linalg {

namespace {

// Householder factorization with the rank check applied to R's diagonal.
Eigen::HouseholderQR<Mat> checked_qr(const Mat& a) {
  if (a.rows() < a.cols()) {
    throw DimensionMismatch("qr: need rows >= cols, got " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw DomainError("qr: matrix has non-finite entries");
  Eigen::HouseholderQR<Mat> qr(a);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  const double largest = diag.size() ? diag.maxCoeff() : 0.0;
  for (Eigen::Index j = 0; j < diag.size(); ++j) {
    if (!(diag(j) >= kRankTolerance * largest) || largest == 0.0) {
      throw RankDeficient("qr: column " + std::to_string(j) + " is numerically dependent");
    }
  }
  return qr;
}

}  // namespace

ThinQr qr_thin(const Mat& a) {
  const auto qr = checked_qr(a);
  const Eigen::Index m = a.rows();
  const Eigen::Index k = a.cols();
  ThinQr out;
  out.q = qr.householderQ() * Mat::Identity(m, k);
  out.r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (out.r(j, j) < 0.0) {
      out.r.row(j) *= -1.0;
      out.q.col(j) *= -1.0;
    }
  }
  return out;
}

Vec residual_project(const Mat& b, const Vec& y) {
  if (b.rows() != y.size()) throw DimensionMismatch("residual_project: size mismatch");
  return Projector(b).residual(y);
}

Mat nullspace_basis(const Mat& b) {
  const auto qr = checked_qr(b);
  const Eigen::Index m = b.rows();
  const Eigen::Index k = b.cols();
  Mat full = qr.householderQ();
  return full.rightCols(m - k);
}

Vec least_squares(const Mat& b, const Vec& y) {
  if (b.rows() != y.size()) throw DimensionMismatch("least_squares: size mismatch");
  const ThinQr f = qr_thin(b);
  const Vec rhs = f.q.transpose() * y;
  return f.r.triangularView<Eigen::Upper>().solve(rhs);
}

}  // namespace unionrec::linalg
