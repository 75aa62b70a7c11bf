#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dynrisk/errors.hpp"
#include "dynrisk/market.hpp"
#include "dynrisk/optimize.hpp"

namespace dynrisk {

/// Gauss-Hermite rule normalised for a standard normal variable:
/// E[f(Z)] ~= sum_i weights[i] * f(nodes[i]).
template <typename Scalar>
struct GaussHermiteRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }

  template <typename F>
  Scalar expectation(F&& f) const {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Golub-Welsch eigen-decomposition of the Hermite Jacobi matrix for the
/// initial nodes, then Newton polishing on the orthonormal recurrence; the
/// weights come from the polished derivative, which keeps tiny tail weights
/// accurate in relative terms.
template <typename Scalar = double>
GaussHermiteRule<Scalar> gauss_hermite_rule(int n) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (n < 1) throw DomainError("gauss_hermite_rule: node count must be positive");

  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const Scalar b = std::sqrt(Scalar(k) / Scalar(2));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi, Eigen::EigenvaluesOnly);
  Vector roots = solver.eigenvalues();

  const Scalar pi_m4 = Scalar(1) / std::sqrt(std::sqrt(std::numbers::pi_v<Scalar>));
  GaussHermiteRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    Scalar z = roots[i];
    Scalar pp(0);
    for (int iter = 0; iter < 8; ++iter) {
      Scalar p1 = pi_m4;
      Scalar p2(0);
      for (int j = 1; j <= n; ++j) {
        const Scalar p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(Scalar(2) / Scalar(j)) * p2 -
             std::sqrt(Scalar(j - 1) / Scalar(j)) * p3;
      }
      pp = std::sqrt(Scalar(2 * n)) * p2;
      const Scalar step = p1 / pp;
      z -= step;
      if (std::abs(step) <= Scalar(4) * std::numeric_limits<Scalar>::epsilon() *
                                (Scalar(1) + std::abs(z))) {
        break;
      }
    }
    rule.nodes[i] = std::numbers::sqrt2_v<Scalar> * z;
    rule.weights[i] = Scalar(2) / (pp * pp) / std::sqrt(std::numbers::pi_v<Scalar>);
  }
  return rule;
}

struct QuadratureSpec {
  int node_count = 64;

  void validate() const {
    if (node_count < 16) throw ConfigError("quadrature node_count must be >= 16");
  }
};

/// Moments of the one-period power return (1 + beta R)^(1-gamma), R the
/// discounted net stock return over delta. Discounted returns at the rule's
/// nodes are cached, so repeated evaluations over beta are cheap.
class PowerReturnQuadrature {
 public:
  PowerReturnQuadrature(const MarketParams& params, double delta,
                        const QuadratureSpec& spec = {});

  double delta() const { return delta_; }
  const Eigen::VectorXd& returns() const { return returns_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  // E[(1 + beta R)^(1 - gamma)]; beta must lie in [0, 1].
  double expectation(double beta, double gamma) const;
  // d/dbeta of the expectation.
  double derivative(double beta, double gamma) const;
  double second_derivative(double beta, double gamma) const;

  /// Best beta in [lo, hi] for utility orientation sign(1 - gamma): maximises
  /// the expectation when gamma < 1, minimises it when gamma > 1.
  /// Golden section to 1e-8, then Newton polishing of an interior optimum.
  ScalarOptimum best_beta(double lo, double hi, double gamma) const;

 private:
  double delta_;
  Eigen::VectorXd returns_;
  Eigen::VectorXd weights_;
};

/// E[(1 + beta R)^(1-gamma)] with R the discounted net return over delta.
double expected_power_return(double beta, double gamma, double delta,
                             const MarketParams& params,
                             const QuadratureSpec& spec = {});

}  // namespace dynrisk
