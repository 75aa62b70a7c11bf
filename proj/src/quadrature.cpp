#include "dynrisk/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace dynrisk {

namespace {

void check_beta(double beta) {
  if (!(beta >= -1e-12 && beta <= 1.0 + 1e-12)) {
    throw DomainError("power return: beta must lie in [0, 1]");
  }
}

}  // namespace

PowerReturnQuadrature::PowerReturnQuadrature(const MarketParams& params, double delta,
                                             const QuadratureSpec& spec)
    : delta_(delta) {
  spec.validate();
  if (!(delta > 0.0)) throw DomainError("power return: delta must be positive");
  const auto rule = gauss_hermite_rule<double>(spec.node_count);
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * delta;
  const double vol = params.sigma * std::sqrt(delta);
  returns_.resize(rule.size());
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    returns_[i] = discounted_return(std::exp(drift + vol * rule.nodes[i]), params, delta);
  }
  weights_ = rule.weights;
}

double PowerReturnQuadrature::expectation(double beta, double gamma) const {
  check_beta(beta);
  const double a = 1.0 - gamma;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < returns_.size(); ++i) {
    acc += weights_[i] * std::pow(1.0 + beta * returns_[i], a);
  }
  return acc;
}

double PowerReturnQuadrature::derivative(double beta, double gamma) const {
  check_beta(beta);
  const double a = 1.0 - gamma;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < returns_.size(); ++i) {
    acc += weights_[i] * returns_[i] * std::pow(1.0 + beta * returns_[i], -gamma);
  }
  return a * acc;
}

double PowerReturnQuadrature::second_derivative(double beta, double gamma) const {
  check_beta(beta);
  const double a = 1.0 - gamma;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < returns_.size(); ++i) {
    const double ri = returns_[i];
    acc += weights_[i] * ri * ri * std::pow(1.0 + beta * ri, -gamma - 1.0);
  }
  return -a * gamma * acc;
}

ScalarOptimum PowerReturnQuadrature::best_beta(double lo, double hi, double gamma) const {
  const double s = gamma < 1.0 ? 1.0 : -1.0;
  auto objective = [&](double b) { return s * expectation(b, gamma); };
  ScalarOptimum best = golden_section_max(objective, lo, hi, 1e-8);

  // Newton on the first-order condition; the objective is concave in beta.
  if (best.arg > lo && best.arg < hi) {
    double b = best.arg;
    for (int iter = 0; iter < 30; ++iter) {
      const double g1 = derivative(b, gamma);
      const double g2 = second_derivative(b, gamma);
      if (!(g2 != 0.0)) break;
      const double next = std::clamp(b - g1 / g2, lo, hi);
      const double step = std::abs(next - b);
      b = next;
      if (step < 1e-15) break;
    }
    const double fb = objective(b);
    if (fb >= best.value) best = {b, fb};
  }
  return {best.arg, s * best.value};
}

double expected_power_return(double beta, double gamma, double delta,
                             const MarketParams& params, const QuadratureSpec& spec) {
  return PowerReturnQuadrature(params, delta, spec).expectation(beta, gamma);
}

}  // namespace dynrisk
