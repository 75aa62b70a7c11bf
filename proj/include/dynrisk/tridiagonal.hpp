#pragma once

#include <Eigen/Core>

#include "dynrisk/errors.hpp"

namespace dynrisk {

/// Thomas algorithm for lower(i) x(i-1) + diag(i) x(i) + upper(i) x(i+1) = rhs(i).
/// lower(0) and upper(n-1) are ignored. Stable without pivoting for
/// diagonally dominant systems, which is what the implicit schemes produce.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs) {
  const Eigen::Index n = diag.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c(n), x(n);
  Scalar denom = diag[0];
  if (denom == Scalar(0)) throw NumericalError("tridiagonal solve: zero pivot");
  c[0] = upper[0] / denom;
  x[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == Scalar(0)) throw NumericalError("tridiagonal solve: zero pivot");
    c[i] = i + 1 < n ? upper[i] / denom : Scalar(0);
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace dynrisk
