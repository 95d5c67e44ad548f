// Dense kernels used by the transformer encoder, written against Eigen expressions so
// they work for any floating-point scalar. Rows are sequence positions, columns are
// features throughout.
#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace traceoracle {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

inline constexpr double kLayerNormEps = 1e-5;

/// Fixed sinusoidal encoding: sin on even columns, cos on odd columns.
template <typename Scalar>
Matrix<Scalar> sinusoidal_table(int rows, int dim) {
  Matrix<Scalar> pe(rows, dim);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      const double angle = pos * freq;
      pe(pos, i) = static_cast<Scalar>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

/// Row-wise softmax, numerically shifted by the row maximum.
template <typename Derived>
void softmax_rows_inplace(Eigen::MatrixBase<Derived>& s) {
  s = (s.colwise() - s.rowwise().maxCoeff()).array().exp().matrix();
  s = s.array().colwise() / s.rowwise().sum().array();
}

/// Gradient wrt the logits of a row-wise softmax given its output `a` and upstream `da`.
template <typename DerivedA, typename DerivedD>
auto softmax_rows_backward(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedD>& da) {
  using Scalar = typename DerivedA::Scalar;
  const Vector<Scalar> dot = (da.array() * a.array()).rowwise().sum();
  Matrix<Scalar> ds = (a.array() * (da.array().colwise() - dot.array())).matrix();
  return ds;
}

/// Per-row layer normalisation. Keeps the normalised input and inverse deviation for
/// the backward pass.
template <typename Scalar>
struct LayerNormCache {
  Matrix<Scalar> xhat;
  Vector<Scalar> inv_std;
};

template <typename Scalar>
Matrix<Scalar> layer_norm_forward(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma,
                                  const Matrix<Scalar>& beta, LayerNormCache<Scalar>& cache) {
  const Vector<Scalar> mean = x.rowwise().mean();
  Matrix<Scalar> centered = x.colwise() - mean;
  const Vector<Scalar> var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + static_cast<Scalar>(kLayerNormEps)).rsqrt();
  cache.xhat = centered.array().colwise() * cache.inv_std.array();
  Matrix<Scalar> y = cache.xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const LayerNormCache<Scalar>& cache,
                                   const Matrix<Scalar>& gamma, Matrix<Scalar>& dgamma,
                                   Matrix<Scalar>& dbeta) {
  dgamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  const Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.row(0).array();
  const Vector<Scalar> m1 = dxhat.rowwise().mean();
  const Vector<Scalar> m2 = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Matrix<Scalar> dx = (dxhat.array().colwise() - m1.array()) - cache.xhat.array().colwise() * m2.array();
  dx = dx.array().colwise() * cache.inv_std.array();
  return dx;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

/// Zeroes `grad` wherever the pre-activation was not positive.
template <typename DerivedG, typename DerivedX>
void relu_backward_inplace(Eigen::MatrixBase<DerivedG>& grad, const Eigen::MatrixBase<DerivedX>& pre) {
  using Scalar = typename DerivedG::Scalar;
  grad = (pre.array() > Scalar(0)).select(grad, Scalar(0));
}

}  // namespace traceoracle
