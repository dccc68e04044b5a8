#pragma once

#include "fgsmooth/types.hpp"

#include <cmath>
#include <limits>

namespace fgs {

/// Cholesky factor of a symmetric positive-definite matrix, kept as the
/// lower triangle L with L*L^T reconstructing the input.
template <class T>
class SpdFactorization {
 public:
  static SpdFactorization factor(const MatX<T>& s) {
    Eigen::LLT<MatX<T>> llt(s);
    if (llt.info() != Eigen::Success) {
      throw SolveError(ErrorCode::NotPositiveDefinite,
                       "Cholesky pivot <= 0 for " + std::to_string(s.rows()) +
                           "x" + std::to_string(s.cols()) + " matrix");
    }
    SpdFactorization f;
    f.lower_ = llt.matrixL();
    return f;
  }

  const MatX<T>& lower() const { return lower_; }

  MatX<T> reconstruct() const { return lower_ * lower_.transpose(); }

  /// X with (L L^T) X = B.
  MatX<T> solve(const MatX<T>& b) const {
    MatX<T> x = lower_.template triangularView<Eigen::Lower>().solve(b);
    lower_.transpose()
        .template triangularView<Eigen::Upper>()
        .solveInPlace(x);
    return x;
  }

  /// L^{-1} B, the whitening half-solve.
  MatX<T> forward_solve(const MatX<T>& b) const {
    return lower_.template triangularView<Eigen::Lower>().solve(b);
  }

 private:
  MatX<T> lower_;
};

/// Least-squares solve of min ||A x - b|| through Householder QR with
/// back-substitution. Fails rather than regularizing when the triangular
/// factor signals numerical rank loss in the active precision.
template <class T>
VecX<T> qr_solve(const MatX<T>& a, const VecX<T>& b) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (m < n || b.size() != m) {
    throw SolveError(ErrorCode::DimensionMismatch,
                     "qr_solve needs m>=n and matching rhs, got " +
                         std::to_string(m) + "x" + std::to_string(n) +
                         " with rhs " + std::to_string(b.size()));
  }
  Eigen::HouseholderQR<MatX<T>> qr(a);
  const MatX<T>& qrm = qr.matrixQR();
  T max_diag = T(0);
  for (Eigen::Index i = 0; i < n; ++i)
    max_diag = std::max(max_diag, std::abs(qrm(i, i)));
  const T tol =
      std::numeric_limits<T>::epsilon() * max_diag * static_cast<T>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(qrm(i, i)) < tol) {
      throw SolveError(ErrorCode::RankDeficient,
                       "R diagonal entry " + std::to_string(i) +
                           " below epsilon*max*n threshold");
    }
  }
  VecX<T> qtb = b;
  qtb.applyOnTheLeft(qr.householderQ().adjoint());
  return qrm.topRows(n)
      .template triangularView<Eigen::Upper>()
      .solve(qtb.head(n).eval());
}

/// X with S X = B for symmetric positive-definite S.
template <class T>
MatX<T> chol_solve(const MatX<T>& s, const MatX<T>& b) {
  if (s.rows() != s.cols() || s.rows() != b.rows()) {
    throw SolveError(ErrorCode::DimensionMismatch,
                     "chol_solve shapes " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + " vs rhs rows " +
                         std::to_string(b.rows()));
  }
  return SpdFactorization<T>::factor(s).solve(b);
}

/// Solve of a general (nonsymmetric) square system through partially
/// pivoted LU; the regularized inverses (I + J Q)^{-1}, (I + P J)^{-1}
/// of the smoother recursions go through here.
template <class T>
MatX<T> lu_solve(const MatX<T>& a, const MatX<T>& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw SolveError(ErrorCode::DimensionMismatch, "lu_solve shapes");
  }
  Eigen::PartialPivLU<MatX<T>> lu(a);
  const auto& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (u(i, i) == T(0)) {
      throw SolveError(ErrorCode::SolverFailure,
                       "exactly singular pivot in LU solve");
    }
  }
  return lu.solve(b);
}

/// sigma_max / sigma_min, always evaluated in binary64 whatever precision
/// the solver under test runs in; +inf once sigma_min underflows to zero.
double condition_number(const MatrixXd& a);

/// Smallest eigenvalue of a symmetric matrix (diagnostic, binary64).
double min_symmetric_eigenvalue(const MatrixXd& s);

}  // namespace fgs
