#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <limits>

#include <Eigen/Core>

#include "dynrisk/errors.hpp"
#include "dynrisk/rng.hpp"

namespace dynrisk {

/// Black-Scholes market with a bond and one stock. Rates are per year.
struct MarketParams {
  double r = 0.1;
  double mu = 0.18;
  double sigma = 0.35;

  double excess_return() const { return mu - r; }

  // Solvers need sigma > 0; law constructors tolerate sigma == 0.
  void validate() const;
};

/// Power utility x^(1-gamma)/(1-gamma) for both intermediate consumption and
/// terminal wealth. With `consumption == false` the consumption utility is
/// identically zero and every solver pins consumption to zero.
struct UtilityPower {
  double gamma = 0.3;
  bool consumption = true;

  void validate() const;

  double operator()(double x) const {
    if (x <= 0.0) {
      return gamma < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return std::pow(x, 1.0 - gamma) / (1.0 - gamma);
  }

  double consumption_utility(double amount) const {
    return consumption ? (*this)(amount) : 0.0;
  }

  // Sign of 1 - gamma: +1 if larger coefficients mean larger value.
  double orientation() const { return gamma < 1.0 ? 1.0 : -1.0; }
};

/// Time regime of the investor: continuously rebalancing (controls are a
/// stock proportion pi and a consumption rate c) or trading every Delta
/// (controls are beta = stock share of the non-consumed wealth and
/// zeta = consumed fraction).
enum class Regime { Continuous, Discrete };

struct Control {
  double exposure = 0.0;
  double consumption = 0.0;
};

/// Law of exp(Z) with Z ~ N(m, s2).
struct LogNormalLaw {
  double m = 0.0;
  double s2 = 0.0;

  bool degenerate() const { return s2 == 0.0; }
  double mean() const { return std::exp(m + 0.5 * s2); }
  double variance() const { return std::expm1(s2) * std::exp(2.0 * m + s2); }
  double quantile(double p) const;
};

/// Wealth at t + dt when (pi, c) is frozen over [t, t + dt].
LogNormalLaw conditional_wealth_law(double x, double pi, double c, double dt,
                                    const MarketParams& params);

/// Exact solution of the wealth SDE over one step with a frozen control.
double wealth_step_exact(double x, double pi, double c, double dt, double dW,
                         const MarketParams& params);

/// Gross relative stock price change over dt: exp((mu - sigma^2/2) dt + sigma dW).
LogNormalLaw discrete_return_law(const MarketParams& params, double dt);

/// Discounted net return e^{-r dt} * gross - 1.
inline double discounted_return(double gross, const MarketParams& params,
                                double dt) {
  return std::exp(-params.r * dt) * gross - 1.0;
}

/// One trading period in the discrete regime: consume zeta * x, invest
/// beta of the remainder in the stock, grow the rest at the bond rate.
double wealth_step_discrete(double x, double beta, double zeta, double gross,
                            double dt, const MarketParams& params);

using ControlPolicy = std::function<Control(double t, double x)>;

struct SimulationSpec {
  double x0 = 1.0;
  double t0 = 0.0;
  double horizon = 2.0;
  double dt = 1.0 / 24.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 20240601;
  Regime regime = Regime::Continuous;

  std::size_t steps() const;
};

/// Simulated trajectories. Rows are paths; wealth has one column per time
/// point, controls one column per step (applied at step start).
struct PathEnsemble {
  Eigen::VectorXd times;
  Eigen::MatrixXd wealth;
  Eigen::MatrixXd exposure;
  Eigen::MatrixXd consumption;
  std::uint64_t seed = 0;
};

/// Visits every step of every path without storing the ensemble.
/// `visit(path, step, t, x_before, control, x_after)` is called in path-major
/// order; path p draws its normals from `PathStream(seed, p)`.
template <typename Visitor>
void for_each_path_step(const MarketParams& params, const ControlPolicy& policy,
                        const SimulationSpec& spec, Visitor&& visit) {
  const std::size_t steps = spec.steps();
  const double sqrt_dt = std::sqrt(spec.dt);
  for (std::size_t p = 0; p < spec.n_paths; ++p) {
    PathStream stream(spec.seed, p);
    double x = spec.x0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = spec.t0 + static_cast<double>(k) * spec.dt;
      const Control u = policy(t, x);
      if (!std::isfinite(u.exposure) || !std::isfinite(u.consumption)) {
        throw NumericalError("policy returned a non-finite control at t=" +
                             std::to_string(t) + ", x=" + std::to_string(x));
      }
      const double z = stream.normal();
      double next = 0.0;
      if (spec.regime == Regime::Continuous) {
        next = wealth_step_exact(x, u.exposure, u.consumption, spec.dt,
                                 sqrt_dt * z, params);
      } else {
        const double gross = std::exp(
            (params.mu - 0.5 * params.sigma * params.sigma) * spec.dt +
            params.sigma * sqrt_dt * z);
        next = wealth_step_discrete(x, u.exposure, u.consumption, gross,
                                    spec.dt, params);
      }
      if (!(next > 0.0)) {
        throw NumericalError("simulated wealth left (0, inf) at t=" +
                             std::to_string(t));
      }
      visit(p, k, t, x, u, next);
      x = next;
    }
  }
}

PathEnsemble simulate_paths(const MarketParams& params,
                            const ControlPolicy& policy,
                            const SimulationSpec& spec);

}  // namespace dynrisk
