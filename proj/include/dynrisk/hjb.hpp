#pragma once

#include <Eigen/Core>

#include "dynrisk/market.hpp"
#include "dynrisk/risk.hpp"

namespace dynrisk::hjb {

/// Search box for the continuous-time controls.
struct ControlBox {
  double pi_min = -10.0;
  double pi_max = 10.0;
  double c_max = 10.0;

  ExposureBox exposure() const { return {pi_min, pi_max}; }
  void validate() const;
};

/// Time-wealth grid, uniform in time and in log-wealth.
struct GridSpec {
  int t_steps = 240;
  double x_min = 0.1;
  double x_max = 10.0;
  int x_steps = 201;

  void validate() const;
};

/// Value and policy on the grid.
///
/// `value` has one row per time node (t_steps + 1) and one column per wealth
/// node; the policy has one row per time step (the control applied on
/// [t_k, t_{k+1})). Relative solutions carry a single wealth column at the
/// reference wealth plus the coefficient h, with V(t, x) = x^{1-g}/(1-g) h(t).
struct ContinuousSolution {
  double gamma = 0.3;
  bool relative = false;
  Eigen::VectorXd times;
  Eigen::VectorXd wealth;
  Eigen::MatrixXd value;
  Eigen::MatrixXd policy_pi;
  Eigen::MatrixXd policy_c;
  Eigen::VectorXd h;
  int iterations = 0;
  double residual = 0.0;

  double dt() const { return times[1] - times[0]; }
  // Time-linear, log-wealth-linear interpolation (homogeneity for relative).
  double value_at(double t, double x) const;
  // Control of the step containing t, linear in log-wealth, clamped to the grid.
  Control policy_at(double t, double x) const;
};

/// Per-node feasibility data, independent of the value function, so it can
/// be computed once and reused across policy-improvement sweeps.
struct NodeFeasibility {
  double c_hi = 0.0;    // largest feasible consumption rate
  double center = 0.0;  // minimum-risk exposure at zero consumption
  bool constrained = false;
};

NodeFeasibility node_feasibility(const RiskModel& model, const UtilityPower& utility,
                                 const ControlBox& box, double t, double x);

struct HamiltonianMax {
  double pi = 0.0;
  double c = 0.0;
  double value = 0.0;
};

/// Maximises U1(c x) + x (pi (mu - r) + r - c) V_x + x^2 pi^2 sigma^2 V_xx / 2
/// over the feasible controls at (t, x). A non-negative V_xx is replaced by
/// -1e-12 V_x / x. The unconstrained maximiser is returned when feasible;
/// otherwise golden section over c in [0, c_hi] with the analytic pi clipped
/// to the feasible interval. The constraint sets used here are jointly convex
/// in (pi, c), so the clipped objective is concave in c.
HamiltonianMax hamiltonian_argmax(const RiskModel& model, const UtilityPower& utility,
                                  const ControlBox& box, double t, double x, double v_x,
                                  double v_xx, const NodeFeasibility* feasibility = nullptr);

struct RelativeOptions {
  // Wealth at which the constraint is evaluated; the resulting x-independent
  // policy is exact for homogeneous configurations and a local
  // homogenisation otherwise.
  double reference_wealth = 1.0;
  bool check_homogeneity = true;
};

/// Separable solution V = x^{1-g}/(1-g) h(t): h(T) = 1 and
/// h' = -(1-g) sup_u {c^{1-g}/(1-g) + h (r + pi (mu - r) - c - g pi^2 sigma^2 / 2)},
/// integrated backward with classical RK4.
ContinuousSolution solve_relative(const MarketParams& market, const UtilityPower& utility,
                                  const RiskConstraintConfig& cfg, double horizon,
                                  int t_steps, const ControlBox& box = {},
                                  const RelativeOptions& options = {});

struct GeneralOptions {
  int max_iterations = 50;
  double policy_tolerance = 1e-6;
  unsigned threads = 1;
};

/// Policy improvement on the full grid: implicit Euler in time, central
/// differences in log-wealth (upwinded where the central stencil would lose
/// monotonicity), Dirichlet data from the relative solver at both ends.
ContinuousSolution solve_general(const MarketParams& market, const UtilityPower& utility,
                                 const RiskConstraintConfig& cfg, double horizon,
                                 const GridSpec& grid, const ControlBox& box = {},
                                 const GeneralOptions& options = {});

/// Max |dV/dt + sup H| over interior nodes, with a midpoint stencil: forward
/// difference in time, space derivatives averaged over the two time levels.
double hjb_residual(const ContinuousSolution& solution, const MarketParams& market,
                    const UtilityPower& utility, const RiskConstraintConfig& cfg,
                    double horizon, const ControlBox& box = {});

}  // namespace dynrisk::hjb
