#pragma once

#include <optional>

#include <Eigen/Core>

#include "dynrisk/market.hpp"
#include "dynrisk/quadrature.hpp"

namespace dynrisk {

/// Closed-form unconstrained optimum of the continuous-time problem.
///
/// With consumption, c^M(t) = (1/tau + (1 - 1/tau) e^{-tau (T - t)})^{-1} and
/// V^M(t, x) = x^{1-gamma}/(1-gamma) * (1 / c^M(t))^gamma; tau is negative
/// whenever gamma < 1 and r >= 0. Without consumption utility, c^M == 0 and
/// V^M(t, x) = x^{1-gamma}/(1-gamma) * exp((1-gamma) K (T - t)) with
/// K = r + (mu - r)^2 / (2 gamma sigma^2).
struct MertonContinuous {
  MarketParams market;
  double gamma = 0.3;
  bool consumption = true;
  double horizon = 2.0;
  double pi_m = 0.0;
  double tau = 0.0;

  double consumption_rate(double t) const;
  double value_coefficient(double t) const;
  double value(double t, double x) const;
};

MertonContinuous merton_continuous(const MarketParams& params,
                                   const UtilityPower& utility, double horizon);

/// Unconstrained optimum of the discrete-time problem, per period n = 0..N-1
/// (d has N + 1 entries, d[N] = 1).
struct MertonDiscrete {
  double delta = 1.0 / 24.0;
  int periods = 0;
  Eigen::VectorXd beta;
  Eigen::VectorXd zeta;
  Eigen::VectorXd v;
  Eigen::VectorXd d;

  // Period index of time t, clamped to [0, N-1].
  int period(double t) const;
};

MertonDiscrete merton_discrete(const MarketParams& params,
                               const UtilityPower& utility, int periods,
                               double delta, const QuadratureSpec& quad = {});

/// Reference Merton investor(s) used by the conditional-expectation benchmark.
struct MertonReference {
  std::optional<MertonContinuous> continuous;
  std::optional<MertonDiscrete> discrete;
};

}  // namespace dynrisk
