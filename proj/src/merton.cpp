#include "dynrisk/merton.hpp"

#include <algorithm>
#include <cmath>

#include "dynrisk/errors.hpp"

namespace dynrisk {

double MertonContinuous::consumption_rate(double t) const {
  if (!consumption) return 0.0;
  const double remaining = horizon - t;
  // 1 / c^M(t); tau -> 0 limit is 1 + (T - t).
  const double inv = std::abs(tau) < 1e-12
                         ? 1.0 + remaining
                         : 1.0 / tau + (1.0 - 1.0 / tau) * std::exp(-tau * remaining);
  return 1.0 / inv;
}

double MertonContinuous::value_coefficient(double t) const {
  const double remaining = horizon - t;
  if (!consumption) {
    const double k = market.r + market.excess_return() * market.excess_return() /
                                    (2.0 * gamma * market.sigma * market.sigma);
    return std::exp((1.0 - gamma) * k * remaining);
  }
  return std::pow(1.0 / consumption_rate(t), gamma);
}

double MertonContinuous::value(double t, double x) const {
  return std::pow(x, 1.0 - gamma) / (1.0 - gamma) * value_coefficient(t);
}

MertonContinuous merton_continuous(const MarketParams& params,
                                   const UtilityPower& utility, double horizon) {
  utility.validate();
  if (!(params.sigma > 0.0)) throw DomainError("merton_continuous: sigma must be positive");
  if (!(horizon > 0.0)) throw DomainError("merton_continuous: horizon must be positive");
  MertonContinuous m;
  m.market = params;
  m.gamma = utility.gamma;
  m.consumption = utility.consumption;
  m.horizon = horizon;
  const double sharpe2 =
      params.excess_return() * params.excess_return() / (params.sigma * params.sigma);
  m.pi_m = params.excess_return() / (utility.gamma * params.sigma * params.sigma);
  m.tau = -(1.0 - utility.gamma) * (sharpe2 / (2.0 * utility.gamma) + params.r) /
          utility.gamma;
  return m;
}

int MertonDiscrete::period(double t) const {
  const int n = static_cast<int>(std::floor(t / delta + 1e-9));
  return std::clamp(n, 0, std::max(periods - 1, 0));
}

MertonDiscrete merton_discrete(const MarketParams& params, const UtilityPower& utility,
                               int periods, double delta, const QuadratureSpec& quad) {
  utility.validate();
  if (periods < 1) throw DomainError("merton_discrete: need at least one period");
  if (!(delta > 0.0)) throw DomainError("merton_discrete: delta must be positive");

  const double g = utility.gamma;
  const PowerReturnQuadrature returns(params, delta, quad);
  // Returns are i.i.d., so the optimal stock share is the same every period.
  const ScalarOptimum best = returns.best_beta(0.0, 1.0, g);
  const double growth = std::exp(params.r * delta * (1.0 - g));

  MertonDiscrete m;
  m.delta = delta;
  m.periods = periods;
  m.beta = Eigen::VectorXd::Constant(periods, best.arg);
  m.v = Eigen::VectorXd::Constant(periods, best.value);
  m.zeta = Eigen::VectorXd::Zero(periods);
  m.d = Eigen::VectorXd::Ones(periods + 1);
  for (int n = periods - 1; n >= 0; --n) {
    const double carry = growth * m.v[n] * m.d[n + 1];
    if (utility.consumption) {
      // First-order condition of zeta^(1-g) + (1-zeta)^(1-g) * carry.
      const double z = 1.0 / (1.0 + std::pow(carry, 1.0 / g));
      m.zeta[n] = z;
      m.d[n] = std::pow(z, 1.0 - g) + std::pow(1.0 - z, 1.0 - g) * carry;
    } else {
      m.d[n] = carry;
    }
  }
  return m;
}

}  // namespace dynrisk
