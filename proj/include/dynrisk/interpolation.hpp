#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "dynrisk/errors.hpp"

namespace dynrisk {

/// Piecewise cubic Hermite interpolant on a uniform grid y_j = y0 + j*dy,
/// with Fritsch-Butland slopes (weighted harmonic means, zero at local
/// extrema). Monotone data gives a monotone interpolant.
template <typename Scalar = double>
class UniformPchip {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  UniformPchip() = default;

  UniformPchip(Scalar y0, Scalar dy, Vector values)
      : y0_(y0), dy_(dy), v_(std::move(values)), m_(v_.size()) {
    const Eigen::Index n = v_.size();
    if (n < 2) throw DomainError("UniformPchip: need at least two nodes");
    if (!(dy > Scalar(0))) throw DomainError("UniformPchip: spacing must be positive");
    if (n == 2) {
      m_.setConstant((v_[1] - v_[0]) / dy_);
      return;
    }
    Vector delta(n - 1);
    for (Eigen::Index j = 0; j + 1 < n; ++j) delta[j] = (v_[j + 1] - v_[j]) / dy_;
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
      const Scalar a = delta[j - 1];
      const Scalar b = delta[j];
      m_[j] = (a * b > Scalar(0)) ? Scalar(2) * a * b / (a + b) : Scalar(0);
    }
    m_[0] = end_slope(delta[0], delta[1]);
    m_[n - 1] = end_slope(delta[n - 2], delta[n - 3]);
  }

  Scalar lower() const { return y0_; }
  Scalar upper() const { return y0_ + dy_ * Scalar(v_.size() - 1); }
  const Vector& values() const { return v_; }

  /// Value at y; y must lie in [lower(), upper()] (clamped otherwise).
  Scalar operator()(Scalar y) const {
    const Eigen::Index last = v_.size() - 1;
    Scalar s = (y - y0_) / dy_;
    s = std::clamp(s, Scalar(0), Scalar(last));
    Eigen::Index j = static_cast<Eigen::Index>(s);
    if (j >= last) j = last - 1;
    const Scalar u = s - Scalar(j);
    const Scalar u2 = u * u;
    const Scalar u3 = u2 * u;
    const Scalar h00 = Scalar(2) * u3 - Scalar(3) * u2 + Scalar(1);
    const Scalar h10 = u3 - Scalar(2) * u2 + u;
    const Scalar h01 = -Scalar(2) * u3 + Scalar(3) * u2;
    const Scalar h11 = u3 - u2;
    return h00 * v_[j] + h01 * v_[j + 1] + dy_ * (h10 * m_[j] + h11 * m_[j + 1]);
  }

 private:
  // Three-point end formula, limited to keep the end interval monotone.
  static Scalar end_slope(Scalar d0, Scalar d1) {
    Scalar m = (Scalar(3) * d0 - d1) / Scalar(2);
    if (m * d0 <= Scalar(0)) return Scalar(0);
    if (d0 * d1 <= Scalar(0) && std::abs(m) > std::abs(Scalar(3) * d0)) return Scalar(3) * d0;
    return m;
  }

  Scalar y0_ = 0;
  Scalar dy_ = 1;
  Vector v_;
  Vector m_;
};

/// Linear interpolation on a uniform grid, constant outside.
template <typename Derived>
typename Derived::Scalar uniform_linear(const Eigen::MatrixBase<Derived>& values,
                                        typename Derived::Scalar y0,
                                        typename Derived::Scalar dy,
                                        typename Derived::Scalar y) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index last = values.size() - 1;
  if (last == 0) return values[0];
  Scalar s = std::clamp((y - y0) / dy, Scalar(0), Scalar(last));
  Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), last - 1);
  const Scalar u = s - Scalar(j);
  return (Scalar(1) - u) * values[j] + u * values[j + 1];
}

}  // namespace dynrisk
