#pragma once

#include <Eigen/Dense>

namespace beyondwords {

using Eigen::Dynamic;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Dynamic, Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace beyondwords
