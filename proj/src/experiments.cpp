#include "dynrisk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dynrisk/errors.hpp"
#include "dynrisk/merton.hpp"

namespace dynrisk::experiments {

double relative_gap(double v_baseline, double v) {
  if (v_baseline == 0.0) throw DomainError("relative_gap: baseline value is zero");
  return (v_baseline - v) / v_baseline;
}

double efficiency(double coeff_a, double coeff_b, double gamma) {
  if (!(coeff_a > 0.0 && coeff_b > 0.0)) {
    throw DomainError("efficiency: value coefficients must be positive");
  }
  return std::pow(coeff_a / coeff_b, 1.0 / (1.0 - gamma));
}

double efficiency_bisect(double target, const std::function<double(double)>& value_b,
                         double lo, double hi) {
  double v_lo = value_b(lo);
  double v_hi = value_b(hi);
  if (!(target >= v_lo && target <= v_hi)) {
    throw DomainError("efficiency: target value outside the range of the compared investor");
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (value_b(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ExperimentResult::headline(const std::string& key) const {
  for (const auto& [k, v] : headlines) {
    if (k == key) return v;
  }
  throw ConfigError("experiment " + name + " has no headline '" + key + "'");
}

const Table& ExperimentResult::table(const std::string& key) const {
  for (const auto& t : tables) {
    if (t.name == key) return t;
  }
  throw ConfigError("experiment " + name + " has no table '" + key + "'");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

UtilityPower utility_of(const ExperimentConfig& cfg) { return {cfg.gamma, true}; }

RiskConstraintConfig relative_constraint(const ExperimentConfig& cfg, RiskMeasure measure,
                                         double lambda) {
  RiskConstraintConfig rc;
  rc.measure = measure;
  rc.benchmark = MertonExpectation{};
  rc.bound = RiskBound::relative(lambda);
  rc.delta = cfg.delta;
  return rc;
}

int periods_of(double horizon, double delta) {
  const double n = std::round(horizon / delta);
  if (n < 1.0 || std::abs(horizon / delta - n) > 1e-9 * n) {
    throw ConfigError("horizon must be a whole number of periods of length delta");
  }
  return static_cast<int>(n);
}

std::vector<double> surface_wealth(const ExperimentConfig& cfg) {
  std::vector<double> xs(cfg.surface_points);
  const double a = std::log(cfg.grid.x_min);
  const double b = std::log(cfg.grid.x_max);
  for (int i = 0; i < cfg.surface_points; ++i) {
    xs[i] = std::exp(a + (b - a) * i / std::max(cfg.surface_points - 1, 1));
  }
  return xs;
}

Table efficiency_table(std::string name) {
  return {std::move(name), {"sweep_var", "value_coeff_a", "value_coeff_b", "efficiency"}, {}};
}

// Headlines shared by the two lambda sweeps.
void sweep_headlines(ExperimentResult& out, const std::vector<double>& lambdas,
                     const std::vector<double>& eff) {
  bool monotone = true;
  double worst = 1.0;
  for (std::size_t i = 0; i < eff.size(); ++i) {
    worst = std::min(worst, eff[i]);
    if (i > 0 && eff[i] < eff[i - 1] - 1e-10) monotone = false;
    for (double probe : {0.0, 0.05}) {
      if (std::abs(lambdas[i] - probe) < 1e-12) {
        const std::string tag = probe == 0.0 ? "0" : "0.05";
        out.headlines.emplace_back("efficiency_lambda_" + tag, eff[i]);
        out.headlines.emplace_back("loss_lambda_" + tag, 1.0 - eff[i]);
      }
    }
  }
  out.headlines.emplace_back("min_efficiency", worst);
  out.headlines.emplace_back("monotone_in_lambda", monotone ? 1.0 : 0.0);
}

ExperimentResult fig1_var_continuous(const ExperimentConfig& cfg) {
  ExperimentResult out{"fig1_var_continuous", {}, {}};
  const UtilityPower u = utility_of(cfg);
  const RiskConstraintConfig rc = relative_constraint(cfg, RiskMeasure::var(cfg.alpha), 0.05);
  const MertonContinuous merton = merton_continuous(cfg.market, u, cfg.horizon);
  const hjb::ContinuousSolution sol =
      hjb::solve_relative(cfg.market, u, rc, cfg.horizon, cfg.t_steps);
  const auto xs = surface_wealth(cfg);

  Table surface{"surface", {"t", "x", "value", "pi", "c"}, {}};
  Table gap{"gap", {"t", "x", "merton_value", "value", "delta_v"}, {}};
  Table policy{"policy", {"t", "pi", "c", "pi_merton", "c_merton"}, {}};
  double max_pi = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= cfg.t_steps; ++k) {
    const double t = sol.times[k];
    for (double x : xs) {
      const double v = sol.value_at(t, x);
      const double vm = merton.value(t, x);
      if (k < cfg.t_steps) {
        surface.rows.push_back({t, x, v, sol.policy_pi(k, 0), sol.policy_c(k, 0)});
      }
      gap.rows.push_back({t, x, vm, v, relative_gap(vm, v)});
    }
    if (k < cfg.t_steps) {
      policy.rows.push_back({t, sol.policy_pi(k, 0), sol.policy_c(k, 0), merton.pi_m,
                             merton.consumption_rate(t)});
      max_pi = std::max(max_pi, sol.policy_pi(k, 0));
    }
  }
  const RiskModel model = make_risk_model(cfg.market, u, rc, cfg.horizon);
  const double e = efficiency(sol.h[0], merton.value_coefficient(0.0), cfg.gamma);
  out.tables = {surface, gap, policy};
  out.headlines = {
      {"pi_merton", merton.pi_m},
      {"merton_risk_over_wealth",
       risk_continuous(model, 0.0, 1.0, merton.pi_m, merton.consumption_rate(0.0))},
      {"pi_0", sol.policy_pi(0, 0)},
      {"c_0", sol.policy_c(0, 0)},
      {"max_pi", max_pi},
      {"delta_v_0", relative_gap(merton.value(0.0, 1.0), sol.value_at(0.0, 1.0))},
      {"efficiency", e},
      {"loss", 1.0 - e},
      {"residual", sol.residual},
  };
  return out;
}

ExperimentResult eff_vs_lambda_continuous(const ExperimentConfig& cfg) {
  ExperimentResult out{"eff_vs_lambda_continuous", {}, {}};
  const UtilityPower u = utility_of(cfg);
  const double b = merton_continuous(cfg.market, u, cfg.horizon).value_coefficient(0.0);
  Table table = efficiency_table("efficiency");
  std::vector<double> eff;
  for (double lambda : cfg.lambdas) {
    const auto rc = relative_constraint(cfg, RiskMeasure::var(cfg.alpha), lambda);
    const double a = hjb::solve_relative(cfg.market, u, rc, cfg.horizon, cfg.t_steps).h[0];
    eff.push_back(efficiency(a, b, cfg.gamma));
    table.rows.push_back({lambda, a, b, eff.back()});
  }
  out.tables = {table};
  sweep_headlines(out, cfg.lambdas, eff);
  return out;
}

ExperimentResult fig3_absolute_bound(const ExperimentConfig& cfg) {
  ExperimentResult out{"fig3_absolute_bound", {}, {}};
  const UtilityPower u = utility_of(cfg);
  RiskConstraintConfig rc = relative_constraint(cfg, RiskMeasure::var(cfg.alpha), 0.05);
  const hjb::ContinuousSolution rel =
      hjb::solve_relative(cfg.market, u, rc, cfg.horizon, cfg.grid.t_steps);
  rc.bound = RiskBound::absolute(0.05);
  hjb::GeneralOptions opts;
  opts.threads = cfg.threads;
  const hjb::ContinuousSolution sol =
      hjb::solve_general(cfg.market, u, rc, cfg.horizon, cfg.grid, {}, opts);

  Table surface{"surface", {"t", "x", "value", "pi", "c"}, {}};
  for (Eigen::Index k = 0; k < sol.policy_pi.rows(); ++k) {
    for (Eigen::Index j = 0; j < sol.wealth.size(); ++j) {
      surface.rows.push_back({sol.times[k], sol.wealth[j], sol.value(k, j),
                              sol.policy_pi(k, j), sol.policy_c(k, j)});
    }
  }
  Table cmp{"comparison", {"x", "pi_absolute", "pi_relative", "c_absolute", "c_relative"}, {}};
  double rise_above_1 = -std::numeric_limits<double>::infinity();
  double min_excess_below_1 = std::numeric_limits<double>::infinity();
  const Eigen::Index nx = sol.wealth.size();
  for (Eigen::Index j = 0; j < nx; ++j) {
    const double x = sol.wealth[j];
    cmp.rows.push_back({x, sol.policy_pi(0, j), rel.policy_pi(0, 0), sol.policy_c(0, j),
                        rel.policy_c(0, 0)});
    const bool interior = j > 0 && j + 1 < nx;
    if (interior && x > 1.0 && j + 2 < nx) {
      rise_above_1 = std::max(rise_above_1, sol.policy_pi(0, j + 1) - sol.policy_pi(0, j));
    }
    if (interior && x < 1.0) {
      min_excess_below_1 = std::min(min_excess_below_1, sol.policy_pi(0, j) - rel.policy_pi(0, 0));
    }
  }
  out.tables = {surface, cmp};
  out.headlines = {
      {"iterations", double(sol.iterations)},
      {"pi_relative", rel.policy_pi(0, 0)},
      {"max_pi_increase_above_1", rise_above_1},
      {"min_pi_excess_below_1", min_excess_below_1},
  };
  return out;
}

ExperimentResult fig4_bounds_horizons_measures(const ExperimentConfig& cfg) {
  ExperimentResult out{"fig4_bounds_horizons_measures", {}, {}};
  const UtilityPower u = utility_of(cfg);
  const auto xs = surface_wealth(cfg);
  Table policy{"policy", {"T", "measure", "bound", "t", "pi", "c"}, {}};
  Table value0{"value0", {"T", "measure", "bound", "x", "value"}, {}};

  struct Run {
    std::string label;
    RiskMeasure measure;
    double lambda;
  };
  const double inf = std::numeric_limits<double>::infinity();
  double var_tce_gap = 0.0;
  for (double horizon : {1.0, 2.0, 5.0}) {
    std::vector<Run> runs = {{"Merton", RiskMeasure::var(cfg.alpha), inf},
                             {"VaR", RiskMeasure::var(cfg.alpha), 0.05},
                             {"TCE", RiskMeasure::tce(cfg.alpha), 0.05},
                             {"EL", RiskMeasure::el(), 0.01}};
    if (horizon == cfg.horizon) runs.push_back({"VaR", RiskMeasure::var(cfg.alpha), 0.15});
    const int steps = static_cast<int>(std::lround(cfg.t_steps / cfg.horizon * horizon));
    std::map<std::string, double> h0;
    for (const Run& run : runs) {
      RiskConstraintConfig rc = relative_constraint(cfg, run.measure, run.lambda);
      if (run.lambda == inf) rc.bound = RiskBound::none();
      const auto sol = hjb::solve_relative(cfg.market, u, rc, horizon, steps);
      if (run.lambda == 0.05) h0[run.label] = sol.h[0];
      for (int k = 0; k < steps; ++k) {
        policy.rows.push_back({horizon, run.label, run.lambda, sol.times[k],
                               sol.policy_pi(k, 0), sol.policy_c(k, 0)});
      }
      for (double x : xs) {
        value0.rows.push_back({horizon, run.label, run.lambda, x, sol.value_at(0.0, x)});
      }
    }
    const double gap = std::abs(h0["VaR"] - h0["TCE"]) / h0["VaR"];
    var_tce_gap = std::max(var_tce_gap, gap);
    out.headlines.emplace_back("var_tce_relative_gap_T" + std::to_string(int(horizon)), gap);
  }
  out.headlines.emplace_back("max_var_tce_relative_gap", var_tce_gap);
  out.tables = {policy, value0};
  return out;
}

ExperimentResult fig7_var_discrete(const ExperimentConfig& cfg) {
  ExperimentResult out{"fig7_var_discrete", {}, {}};
  const UtilityPower u = utility_of(cfg);
  const int n_periods = periods_of(cfg.horizon, cfg.delta);
  const RiskConstraintConfig rc = relative_constraint(cfg, RiskMeasure::var(cfg.alpha), 0.05);
  mdp::SolveOptions opts;
  opts.quadrature = cfg.quadrature;
  const MertonDiscrete merton =
      merton_discrete(cfg.market, u, n_periods, cfg.delta, cfg.quadrature);
  const mdp::DiscreteSolution sol =
      mdp::solve_relative(cfg.market, u, rc, n_periods, cfg.delta, opts);
  const auto xs = surface_wealth(cfg);

  Table surface{"surface", {"n", "t", "x", "value", "beta", "zeta"}, {}};
  Table gap{"gap", {"n", "t", "x", "merton_value", "value", "delta_v"}, {}};
  Table policy{"policy", {"n", "t", "beta", "zeta", "beta_merton", "zeta_merton"}, {}};
  for (int n = 0; n <= n_periods; ++n) {
    const double t = sol.times[n];
    for (double x : xs) {
      const double v = sol.value_at(n, x);
      const double vm = std::pow(x, 1.0 - cfg.gamma) / (1.0 - cfg.gamma) * merton.d[n];
      if (n < n_periods) {
        surface.rows.push_back({double(n), t, x, v, sol.policy_beta(n, 0), sol.policy_zeta(n, 0)});
      }
      gap.rows.push_back({double(n), t, x, vm, v, relative_gap(vm, v)});
    }
    if (n < n_periods) {
      policy.rows.push_back({double(n), t, sol.policy_beta(n, 0), sol.policy_zeta(n, 0),
                             merton.beta[n], merton.zeta[n]});
    }
  }
  const RiskModel model = make_risk_model(cfg.market, u, rc, cfg.horizon, cfg.quadrature);
  const double e = efficiency(sol.d[0], merton.d[0], cfg.gamma);
  out.tables = {surface, gap, policy};
  out.headlines = {
      {"beta_merton", merton.beta[0]},
      {"merton_risk_over_wealth",
       risk_of_control(model, Regime::Discrete, 0.0, 1.0, merton.beta[0], merton.zeta[0])},
      {"beta_0", sol.policy_beta(0, 0)},
      {"zeta_0", sol.policy_zeta(0, 0)},
      {"zeta_merton_0", merton.zeta[0]},
      {"delta_v_0", relative_gap(merton.d[0], sol.d[0])},
      {"efficiency", e},
      {"loss", 1.0 - e},
  };
  return out;
}

ExperimentResult eff_vs_lambda_discrete(const ExperimentConfig& cfg) {
  ExperimentResult out{"eff_vs_lambda_discrete", {}, {}};
  const UtilityPower u = utility_of(cfg);
  const int n_periods = periods_of(cfg.horizon, cfg.delta);
  mdp::SolveOptions opts;
  opts.quadrature = cfg.quadrature;
  const double b =
      merton_discrete(cfg.market, u, n_periods, cfg.delta, cfg.quadrature).d[0];
  Table table = efficiency_table("efficiency");
  std::vector<double> eff;
  for (double lambda : cfg.lambdas) {
    const auto rc = relative_constraint(cfg, RiskMeasure::var(cfg.alpha), lambda);
    const double a = mdp::solve_relative(cfg.market, u, rc, n_periods, cfg.delta, opts).d[0];
    eff.push_back(efficiency(a, b, cfg.gamma));
    table.rows.push_back({lambda, a, b, eff.back()});
  }
  out.tables = {table};
  sweep_headlines(out, cfg.lambdas, eff);
  return out;
}

// Discrete (trading every delta) against continuous investor, both without
// short-selling or borrowing and without consumption utility. The VaR pair
// uses current wealth as benchmark; the continuous investor's risk is
// measured with the number of shares frozen over the risk horizon.
ExperimentResult eff_vs_delta(const ExperimentConfig& cfg) {
  ExperimentResult out{"eff_vs_delta", {}, {}};
  const UtilityPower u{0.9, false};
  const double horizon = cfg.delta_sweep_horizon;
  const int steps = static_cast<int>(std::lround(cfg.delta_sweep_steps_per_year * horizon));
  hjb::ControlBox box;
  box.pi_min = 0.0;
  box.pi_max = 1.0;
  mdp::SolveOptions opts;
  opts.quadrature = cfg.quadrature;

  const double h_merton =
      hjb::solve_relative(cfg.market, u, RiskConstraintConfig{RiskMeasure::var(cfg.alpha),
                                                              MertonExpectation{},
                                                              RiskBound::none(), cfg.delta},
                          horizon, steps, box)
          .h[0];

  Table merton_table = efficiency_table("merton");
  Table var_table = efficiency_table("var");
  double worst_merton = 1.0;
  double worst_var = 1.0;
  int infeasible = 0;
  for (double delta : cfg.deltas) {
    const int n = periods_of(horizon, delta);
    const double d_merton = merton_discrete(cfg.market, u, n, delta, cfg.quadrature).d[0];
    const double e_merton = efficiency(d_merton, h_merton, u.gamma);
    worst_merton = std::min(worst_merton, e_merton);
    merton_table.rows.push_back({delta, d_merton, h_merton, e_merton});

    RiskConstraintConfig rc{RiskMeasure::var(cfg.alpha), FractionOfWealth{1.0},
                            RiskBound::relative(0.05), delta};
    double a = kNaN, b = kNaN, e = kNaN;
    try {
      a = mdp::solve_relative(cfg.market, u, rc, n, delta, opts).d[0];
      rc.frozen_shares = true;
      b = hjb::solve_relative(cfg.market, u, rc, horizon, steps, box).h[0];
      e = efficiency(a, b, u.gamma);
      worst_var = std::min(worst_var, e);
    } catch (const InfeasibleError&) {
      ++infeasible;
    }
    var_table.rows.push_back({delta, a, b, e});
  }
  out.tables = {merton_table, var_table};
  out.headlines = {
      {"continuous_merton_coeff", h_merton},
      {"min_efficiency_merton", worst_merton},
      {"min_efficiency_var", worst_var},
      {"infeasible_points", double(infeasible)},
  };
  return out;
}

}  // namespace

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {
      "fig1_var_continuous", "eff_vs_lambda_continuous", "fig3_absolute_bound",
      "fig4_bounds_horizons_measures", "fig7_var_discrete", "eff_vs_lambda_discrete",
      "eff_vs_delta"};
  return names;
}

ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& config) {
  if (name == "fig1_var_continuous") return fig1_var_continuous(config);
  if (name == "eff_vs_lambda_continuous") return eff_vs_lambda_continuous(config);
  if (name == "fig3_absolute_bound") return fig3_absolute_bound(config);
  if (name == "fig4_bounds_horizons_measures") return fig4_bounds_horizons_measures(config);
  if (name == "fig7_var_discrete") return fig7_var_discrete(config);
  if (name == "eff_vs_lambda_discrete") return eff_vs_lambda_discrete(config);
  if (name == "eff_vs_delta") return eff_vs_delta(config);
  throw ConfigError("unknown experiment '" + name + "'");
}

namespace {

template <typename Solution, typename Stepper>
McValueReport run_value_check(const Solution& solution, const MarketParams& market,
                              const UtilityPower& utility, const RiskModel& model,
                              double reference, const SimulationSpec& spec,
                              std::size_t risk_paths, Stepper&& step_utility) {
  std::vector<double> totals(spec.n_paths, 0.0);
  const std::size_t steps = spec.steps();
  double worst = -std::numeric_limits<double>::infinity();
  const ControlPolicy policy = [&](double t, double x) { return solution.policy_at(t, x); };
  for_each_path_step(market, policy, spec,
                     [&](std::size_t p, std::size_t k, double t, double x, const Control& u,
                         double next) {
                       totals[p] += step_utility(t, x, u, next);
                       if (k + 1 == steps) totals[p] += utility(next);
                       if (p < risk_paths && !model.constraint.bound.unbounded()) {
                         const double risk = risk_of_control(model, spec.regime, t, x,
                                                             u.exposure, u.consumption);
                         worst = std::max(worst, risk - model.constraint.bound.evaluate(x));
                       }
                     });
  const double n = static_cast<double>(spec.n_paths);
  double mean = 0.0;
  for (double v : totals) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : totals) ss += (v - mean) * (v - mean);
  McValueReport r;
  r.estimate = mean;
  r.standard_error = std::sqrt(ss / (n - 1.0) / n);
  r.reference = reference;
  r.z = (mean - reference) / r.standard_error;
  r.max_risk_excess = worst;
  return r;
}

}  // namespace

McValueReport mc_value_check(const hjb::ContinuousSolution& solution,
                             const MarketParams& market, const UtilityPower& utility,
                             const RiskModel& model, double x0, std::size_t n_paths,
                             std::uint64_t seed, std::size_t risk_paths) {
  SimulationSpec spec;
  spec.x0 = x0;
  spec.t0 = solution.times[0];
  spec.horizon = solution.times[solution.times.size() - 1];
  spec.dt = solution.dt();
  spec.n_paths = n_paths;
  spec.seed = seed;
  spec.regime = Regime::Continuous;
  const double dt = spec.dt;
  return run_value_check(
      solution, market, utility, model, solution.value_at(spec.t0, x0), spec, risk_paths,
      [&](double, double x, const Control& u, double next) {
        // The consumption rate is frozen over the step, like the exposure.
        return 0.5 * dt *
               (utility.consumption_utility(u.consumption * x) +
                utility.consumption_utility(u.consumption * next));
      });
}

McValueReport mc_value_check(const mdp::DiscreteSolution& solution,
                             const MarketParams& market, const UtilityPower& utility,
                             const RiskModel& model, double x0, std::size_t n_paths,
                             std::uint64_t seed, std::size_t risk_paths) {
  SimulationSpec spec;
  spec.x0 = x0;
  spec.t0 = 0.0;
  spec.horizon = solution.periods * solution.delta;
  spec.dt = solution.delta;
  spec.n_paths = n_paths;
  spec.seed = seed;
  spec.regime = Regime::Discrete;
  return run_value_check(solution, market, utility, model, solution.value_at(0, x0), spec,
                         risk_paths, [&](double, double x, const Control& u, double) {
                           return utility.consumption_utility(u.consumption * x);
                         });
}

}  // namespace dynrisk::experiments
