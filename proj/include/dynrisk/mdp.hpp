#pragma once

#include <Eigen/Core>

#include "dynrisk/market.hpp"
#include "dynrisk/quadrature.hpp"
#include "dynrisk/risk.hpp"

namespace dynrisk::mdp {

/// Log-uniform wealth grid for the general recursion.
struct WealthGrid {
  double x_min = 0.05;
  double x_max = 20.0;
  int nodes = 401;

  void validate() const;
};

/// Solution of the discrete-time problem over periods n = 0..N-1.
///
/// Relative solutions hold d (N + 1 entries, d[N] = 1) with
/// V(t_n, x) = x^{1-g}/(1-g) d[n] and one policy column. General solutions
/// hold the value on the wealth grid ((N + 1) x nodes) and one policy
/// column per wealth node.
struct DiscreteSolution {
  double gamma = 0.3;
  double delta = 1.0 / 24.0;
  int periods = 0;
  bool relative = true;
  Eigen::VectorXd times;
  Eigen::VectorXd d;
  Eigen::VectorXd wealth;
  Eigen::MatrixXd value;
  Eigen::MatrixXd policy_beta;
  Eigen::MatrixXd policy_zeta;

  double value_at(int n, double x) const;
  // (beta, zeta) of the period containing t, linear in log-wealth.
  Control policy_at(double t, double x) const;
};

struct SolveOptions {
  QuadratureSpec quadrature;
  ExposureBox box = ExposureBox::discrete_default();
  unsigned threads = 1;
};

/// The d-recursion d_N = 1,
/// d_n = sup_zeta { zeta^{1-g} + (1-zeta)^{1-g} e^{r delta (1-g)}
///                  sup_{beta in B(zeta)} E[(1 + beta R)^{1-g}] d_{n+1} }
/// (inf when g > 1). The risk horizon is the trading period `delta`.
DiscreteSolution solve_relative(const MarketParams& market, const UtilityPower& utility,
                                const RiskConstraintConfig& cfg, int periods, double delta,
                                const SolveOptions& options = {});

/// Optimality equation on a wealth grid with the continuation value
/// interpolated by monotone cubics in log-wealth and extrapolated with the
/// power-utility asymptote.
DiscreteSolution solve_general(const MarketParams& market, const UtilityPower& utility,
                               const RiskConstraintConfig& cfg, int periods, double delta,
                               const WealthGrid& grid = {},
                               const SolveOptions& options = {});

}  // namespace dynrisk::mdp
