#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "beyondwords/errors.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

template <typename Scalar>
struct SvdFactors {
  Matrix<Scalar> U;  // n x r, orthonormal columns
  Vector<Scalar> S;  // r, non-increasing
  Matrix<Scalar> V;  // k x r, orthonormal columns
  int rank = 0;

  Matrix<Scalar> reconstruct() const { return U * S.asDiagonal() * V.transpose(); }
};

namespace detail {

// Fills columns [from, r) of `u` with unit vectors orthogonal to all earlier
// columns, drawn from the standard basis.
template <typename Scalar>
void complete_orthonormal(Matrix<Scalar>& u, Eigen::Index from) {
  Eigen::Index basis = 0;
  for (Eigen::Index col = from; col < u.cols(); ++col) {
    for (; basis < u.rows(); ++basis) {
      Vector<Scalar> v = Vector<Scalar>::Unit(u.rows(), basis);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < col; ++j) v -= u.col(j).dot(v) * u.col(j);
      }
      if (v.norm() > Scalar(0.5)) {
        u.col(col) = v.normalized();
        ++basis;
        break;
      }
    }
  }
}

}  // namespace detail

/// Rank-r SVD of C (n x k) through the eigendecomposition of the k x k Gram
/// matrix C^T C. Columns of V are sign-normalized so that each column's
/// largest-magnitude entry is non-negative; U follows as C V / S, with
/// columns for vanishing singular values completed to an orthonormal set.
template <typename Derived>
SvdFactors<typename Derived::Scalar> truncated_svd(const Eigen::MatrixBase<Derived>& c, int r) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = c.rows();
  const Eigen::Index k = c.cols();
  if (r < 1 || r > std::min(n, k)) {
    throw ConfigError("truncated_svd: rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(std::min(n, k)) + "]");
  }
  if (!c.allFinite()) throw NumericError("truncated_svd: input contains non-finite values");

  const Matrix<Scalar> gram = c.transpose() * c;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("truncated_svd: eigensolver failed");

  SvdFactors<Scalar> f;
  f.rank = r;
  f.S.resize(r);
  f.V.resize(k, r);
  for (int i = 0; i < r; ++i) {
    const Eigen::Index src = k - 1 - i;  // eigenvalues come back ascending
    f.S[i] = std::sqrt(std::max(eig.eigenvalues()[src], Scalar(0)));
    Vector<Scalar> v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < Scalar(0)) v = -v;
    f.V.col(i) = v;
  }

  const Scalar cutoff = static_cast<Scalar>(std::max(n, k)) *
                        std::numeric_limits<Scalar>::epsilon() * (r > 0 ? f.S[0] : Scalar(0));
  f.U.resize(n, r);
  Eigen::Index live = 0;
  while (live < r && f.S[live] > cutoff) {
    f.U.col(live) = (c * f.V.col(live)) / f.S[live];
    ++live;
  }
  for (Eigen::Index i = live; i < r; ++i) f.S[i] = std::max(f.S[i], Scalar(0));
  detail::complete_orthonormal(f.U, live);

  // One Householder pass restores orthonormality lost to the squared
  // condition number of the Gram matrix; the sign fix keeps U aligned with
  // C V / S.
  Eigen::HouseholderQR<Matrix<Scalar>> qr(f.U);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, r);
  const Matrix<Scalar> rr = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < r; ++i) {
    if (rr(i, i) < Scalar(0)) q.col(i) = -q.col(i);
  }
  f.U = std::move(q);
  return f;
}

/// Cumulative share of squared singular values; the last entry is 1.
template <typename Derived>
std::vector<double> explained_variance(const Eigen::MatrixBase<Derived>& s) {
  if (s.size() == 0) throw ConfigError("explained_variance: empty singular values");
  if ((s.array() < 0).any()) throw ConfigError("explained_variance: negative singular value");
  const double total = static_cast<double>(s.squaredNorm());
  if (total == 0.0) throw NumericError("explained_variance: all singular values are zero");
  std::vector<double> out;
  double acc = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    acc += static_cast<double>(s[i]) * static_cast<double>(s[i]);
    out.push_back(acc / total);
  }
  out.back() = 1.0;
  return out;
}

/// Smallest number of leading components whose cumulative ratio reaches
/// `threshold`.
int select_rank(const std::vector<double>& cumulative, double threshold = 0.90);

}  // namespace beyondwords
