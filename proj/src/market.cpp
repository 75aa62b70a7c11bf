#include "dynrisk/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynrisk/normal.hpp"

namespace dynrisk {

void MarketParams::validate() const {
  if (!std::isfinite(r) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    throw ConfigError("market parameters must be finite");
  }
  if (r < 0.0) throw ConfigError("market.r must be >= 0");
  if (!(sigma > 0.0)) throw ConfigError("market.sigma must be > 0");
}

void UtilityPower::validate() const {
  if (!(gamma > 0.0) || gamma == 1.0 || !std::isfinite(gamma)) {
    throw ConfigError("utility.gamma must be positive and different from 1");
  }
}

double LogNormalLaw::quantile(double p) const {
  return std::exp(m + std::sqrt(s2) * norm_quantile(p));
}

LogNormalLaw conditional_wealth_law(double x, double pi, double c, double dt,
                                    const MarketParams& params) {
  if (!(x > 0.0)) throw DomainError("conditional_wealth_law: wealth must be positive");
  if (!(dt > 0.0)) throw DomainError("conditional_wealth_law: horizon must be positive");
  if (c < 0.0) throw DomainError("conditional_wealth_law: consumption must be >= 0");
  const double vol2 = pi * pi * params.sigma * params.sigma;
  return {std::log(x) + (params.r + pi * params.excess_return() - c - 0.5 * vol2) * dt,
          vol2 * dt};
}

double wealth_step_exact(double x, double pi, double c, double dt, double dW,
                         const MarketParams& params) {
  if (!(x > 0.0)) throw DomainError("wealth_step_exact: wealth must be positive");
  if (!(dt > 0.0)) throw DomainError("wealth_step_exact: step must be positive");
  const double vol2 = pi * pi * params.sigma * params.sigma;
  return x * std::exp((params.r + pi * params.excess_return() - c - 0.5 * vol2) * dt +
                      pi * params.sigma * dW);
}

LogNormalLaw discrete_return_law(const MarketParams& params, double dt) {
  if (!(dt > 0.0)) throw DomainError("discrete_return_law: step must be positive");
  const double s2 = params.sigma * params.sigma;
  return {(params.mu - 0.5 * s2) * dt, s2 * dt};
}

double wealth_step_discrete(double x, double beta, double zeta, double gross,
                            double dt, const MarketParams& params) {
  const double kept = (1.0 - zeta) * x;
  const double phi = beta * kept;
  return std::exp(params.r * dt) * (kept - phi) + phi * gross;
}

std::size_t SimulationSpec::steps() const {
  if (!(dt > 0.0)) throw DomainError("simulation step must be positive");
  const double ratio = (horizon - t0) / dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw DomainError("simulation step must divide the horizon");
  }
  return static_cast<std::size_t>(n);
}

PathEnsemble simulate_paths(const MarketParams& params,
                            const ControlPolicy& policy,
                            const SimulationSpec& spec) {
  if (spec.n_paths < 1) throw DomainError("simulate_paths: need at least one path");
  const std::size_t steps = spec.steps();
  const auto n = static_cast<Eigen::Index>(spec.n_paths);
  const auto m = static_cast<Eigen::Index>(steps);

  PathEnsemble ens;
  ens.seed = spec.seed;
  ens.times.resize(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) {
    ens.times[k] = spec.t0 + static_cast<double>(k) * spec.dt;
  }
  ens.wealth.resize(n, m + 1);
  ens.exposure.resize(n, m);
  ens.consumption.resize(n, m);
  ens.wealth.col(0).setConstant(spec.x0);

  for_each_path_step(params, policy, spec,
                     [&](std::size_t p, std::size_t k, double, double, const Control& u,
                         double next) {
                       const auto i = static_cast<Eigen::Index>(p);
                       const auto j = static_cast<Eigen::Index>(k);
                       ens.exposure(i, j) = u.exposure;
                       ens.consumption(i, j) = u.consumption;
                       ens.wealth(i, j + 1) = next;
                     });
  return ens;
}

}  // namespace dynrisk
