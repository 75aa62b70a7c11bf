#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dynrisk/hjb.hpp"
#include "dynrisk/market.hpp"
#include "dynrisk/mdp.hpp"
#include "dynrisk/quadrature.hpp"
#include "dynrisk/risk.hpp"

namespace dynrisk::experiments {

/// (V_baseline - V) / V_baseline.
double relative_gap(double v_baseline, double v);

/// Initial wealth e with V_B(0, e) = V_A(0, 1) for power-form values with
/// coefficients a (investor A) and b (investor B).
double efficiency(double coeff_a, double coeff_b, double gamma);

/// Same for a general increasing value function of investor B, by bisection
/// on [lo, hi] to 1e-8.
double efficiency_bisect(double target, const std::function<double(double)>& value_b,
                         double lo, double hi);

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ExperimentResult {
  std::string name;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, double>> headlines;

  double headline(const std::string& key) const;
  const Table& table(const std::string& key) const;
};

struct ExperimentConfig {
  MarketParams market;
  double gamma = 0.3;
  double horizon = 2.0;
  double delta = 1.0 / 24.0;
  double alpha = 0.01;
  int t_steps = 240;
  hjb::GridSpec grid;
  mdp::WealthGrid wealth_grid;
  QuadratureSpec quadrature;
  // Wealth points of the exported relative surfaces.
  int surface_points = 41;
  std::vector<double> lambdas = {0.0,  0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07,
                                 0.08, 0.09, 0.1,  0.11, 0.12, 0.13, 0.14, 0.15};
  std::vector<double> deltas = {1.0 / 24.0, 1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 2.5};
  // Horizon and steps per year of the cross-regime comparison.
  double delta_sweep_horizon = 10.0;
  int delta_sweep_steps_per_year = 120;
  unsigned threads = 1;
};

const std::vector<std::string>& recipe_names();

/// Runs a named recipe; unknown names raise ConfigError.
ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& config);

struct McValueReport {
  double estimate = 0.0;
  double standard_error = 0.0;
  double reference = 0.0;
  double z = 0.0;
  // Largest risk - bound seen along the first `risk_paths` paths.
  double max_risk_excess = 0.0;
};

/// Simulates the stored policy from (0, x0) on the solution's time grid and
/// estimates the realised objective (trapezoidal consumption integral plus
/// terminal utility).
McValueReport mc_value_check(const hjb::ContinuousSolution& solution,
                             const MarketParams& market, const UtilityPower& utility,
                             const RiskModel& model, double x0, std::size_t n_paths,
                             std::uint64_t seed, std::size_t risk_paths = 1000);

/// Discrete counterpart: sum of U1(zeta X) over periods plus terminal utility.
McValueReport mc_value_check(const mdp::DiscreteSolution& solution,
                             const MarketParams& market, const UtilityPower& utility,
                             const RiskModel& model, double x0, std::size_t n_paths,
                             std::uint64_t seed, std::size_t risk_paths = 1000);

}  // namespace dynrisk::experiments
