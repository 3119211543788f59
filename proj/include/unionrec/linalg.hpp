#pragma once

// Dense real linear algebra: Householder QR, orthogonal projectors and
// least squares. Projectors are represented by their orthonormal Q factor
// and never materialized as M x M matrices.

#include <Eigen/Dense>

namespace unionrec::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// A column is treated as dependent if |R_ii| < kRankTolerance * max_j |R_jj|.
inline constexpr double kRankTolerance = 1e-10;

struct ThinQr {
  Mat q;  // M x k, orthonormal columns
  Mat r;  // k x k, upper triangular with non-negative diagonal
};

/// Thin Householder QR of a full-column-rank M x k matrix (M >= k).
/// The diagonal of R is made non-negative so the factorization is unique.
/// Throws RankDeficient when a diagonal entry of R falls below tolerance.
ThinQr qr_thin(const Mat& a);

/// P^perp y = y - Q Q^T y for the column span of `b`.
Vec residual_project(const Mat& b, const Vec& y);

/// Orthonormal basis (M x (M-k)) of the orthogonal complement of span(b),
/// i.e. the eigenvectors of P^perp with eigenvalue one.
Mat nullspace_basis(const Mat& b);

/// argmin_c ||y - b c||_2 via R c = Q^T y.
Vec least_squares(const Mat& b, const Vec& y);

// Orthogonal projector onto span(B), stored as the thin Q factor.
class Projector {
 public:
  Projector() = default;
  explicit Projector(const Mat& b) : q_(qr_thin(b).q) {}

  static Projector from_orthonormal(Mat q) {
    Projector p;
    p.q_ = std::move(q);
    return p;
  }

  Eigen::Index rows() const { return q_.rows(); }
  Eigen::Index rank() const { return q_.cols(); }
  const Mat& q() const { return q_; }

  Vec project(const Vec& y) const { return q_ * (q_.transpose() * y); }
  Vec residual(const Vec& y) const { return y - project(y); }
  double residual_energy(const Vec& y) const { return residual(y).squaredNorm(); }

 private:
  Mat q_;
};

}  // namespace unionrec::linalg
