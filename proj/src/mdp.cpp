#include "dynrisk/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dynrisk/errors.hpp"
#include "dynrisk/interpolation.hpp"
#include "dynrisk/optimize.hpp"
#include "dynrisk/parallel.hpp"

namespace dynrisk::mdp {

namespace {

constexpr double kTol = 1e-10;
constexpr double kSearchTol = 1e-8;

std::string node_text(double t, double x) {
  return "t=" + std::to_string(t) + ", x=" + std::to_string(x);
}

double power_value(double x, double gamma, double coefficient) {
  return std::pow(x, 1.0 - gamma) / (1.0 - gamma) * coefficient;
}

// Feasible consumption fractions [0, zeta_hi] at one state (the risk grows
// with zeta) and the minimum-risk beta at zeta = 0.
struct StateFeasibility {
  double zeta_hi = 1.0;
  double center = std::numeric_limits<double>::quiet_NaN();
};

ScalarOptimum least_risk(const RiskEvaluator& risk, const ExposureBox& box, double zeta) {
  return golden_section_min([&](double b) { return risk(b, zeta); }, box.lo, box.hi, kTol);
}

StateFeasibility state_feasibility(const RiskEvaluator& risk, const ExposureBox& box,
                                   bool consumption, double t, double x) {
  StateFeasibility sf;
  if (risk.unbounded()) {
    sf.zeta_hi = consumption ? 1.0 : 0.0;
    return sf;
  }
  const double eps = risk.bound();
  const ScalarOptimum zero = least_risk(risk, box, 0.0);
  if (!(zero.value <= eps)) {
    throw InfeasibleError("no feasible control at " + node_text(t, x));
  }
  sf.center = zero.arg;
  if (!consumption) {
    sf.zeta_hi = 0.0;
    return sf;
  }
  double lo = 0.0;
  double center = sf.center;
  for (int pass = 0; pass < 50; ++pass) {
    if (risk(center, 1.0) <= eps) {
      lo = 1.0;
      break;
    }
    lo = boundary_root([&](double z) { return risk(center, z) - eps; }, lo, 1.0, kTol);
    const ScalarOptimum least = least_risk(risk, box, lo);
    if (std::abs(least.arg - center) <= kTol || !(least.value < eps)) break;
    center = least.arg;
  }
  sf.zeta_hi = lo;
  return sf;
}

// Feasible beta closest to `target` at consumption zeta.
double clip_beta(const RiskEvaluator& risk, const ExposureBox& box,
                 const StateFeasibility& sf, double zeta, double target) {
  if (risk.feasible(target, zeta)) return target;
  const double eps = risk.bound();
  double center = sf.center;
  if (!(risk(center, zeta) <= eps)) center = least_risk(risk, box, zeta).arg;
  return boundary_root([&](double b) { return risk(b, zeta) - eps; }, center, target, kTol);
}

ExposureInterval beta_interval(const RiskEvaluator& risk, const ExposureBox& box,
                               const StateFeasibility& sf, double zeta) {
  if (risk.unbounded()) return {box.lo, box.hi, false};
  return {clip_beta(risk, box, sf, zeta, box.lo), clip_beta(risk, box, sf, zeta, box.hi),
          false};
}

void check_inputs(const MarketParams& market, const UtilityPower& utility,
                  const RiskConstraintConfig& cfg, int periods, double delta,
                  const SolveOptions& options) {
  market.validate();
  utility.validate();
  cfg.validate();
  options.quadrature.validate();
  if (periods < 1) throw ConfigError("need at least one period");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(options.box.lo >= 0.0 && options.box.hi <= 1.0 && options.box.lo < options.box.hi)) {
    throw ConfigError("discrete exposure box must lie inside [0, 1]");
  }
}

RiskConstraintConfig with_period(RiskConstraintConfig cfg, double delta) {
  cfg.delta = delta;
  return cfg;
}

DiscreteSolution empty_solution(const UtilityPower& utility, int periods, double delta) {
  DiscreteSolution sol;
  sol.gamma = utility.gamma;
  sol.delta = delta;
  sol.periods = periods;
  sol.times = Eigen::VectorXd::LinSpaced(periods + 1, 0.0, periods * delta);
  return sol;
}

}  // namespace

void WealthGrid::validate() const {
  if (!(x_min > 0.0 && x_min < x_max)) throw ConfigError("wealth grid needs 0 < x_min < x_max");
  if (nodes < 3) throw ConfigError("wealth grid needs at least 3 nodes");
}

double DiscreteSolution::value_at(int n, double x) const {
  if (n < 0 || n > periods) throw DomainError("value_at: period out of range");
  if (relative) return power_value(x, gamma, d[n]);
  const Eigen::Index last = wealth.size() - 1;
  if (x <= wealth[0]) return value(n, 0) * std::pow(x / wealth[0], 1.0 - gamma);
  if (x >= wealth[last]) return value(n, last) * std::pow(x / wealth[last], 1.0 - gamma);
  const double y0 = std::log(wealth[0]);
  const double dy = (std::log(wealth[last]) - y0) / double(last);
  const UniformPchip<double> f(y0, dy, value.row(n).transpose());
  return f(std::log(x));
}

Control DiscreteSolution::policy_at(double t, double x) const {
  auto n = static_cast<Eigen::Index>(std::floor(t / delta + 1e-9));
  n = std::clamp<Eigen::Index>(n, 0, periods - 1);
  if (policy_beta.cols() == 1) return {policy_beta(n, 0), policy_zeta(n, 0)};
  const Eigen::Index last = wealth.size() - 1;
  const double y0 = std::log(wealth[0]);
  const double dy = (std::log(wealth[last]) - y0) / double(last);
  return {uniform_linear(policy_beta.row(n).transpose(), y0, dy, std::log(x)),
          uniform_linear(policy_zeta.row(n).transpose(), y0, dy, std::log(x))};
}

DiscreteSolution solve_relative(const MarketParams& market, const UtilityPower& utility,
                                const RiskConstraintConfig& cfg_in, int periods,
                                double delta, const SolveOptions& options) {
  const RiskConstraintConfig cfg = with_period(cfg_in, delta);
  check_inputs(market, utility, cfg, periods, delta, options);
  if (!cfg.bound.unbounded() && !cfg.homogeneous()) {
    throw ConfigError(
        "risk configuration is not homogeneous in wealth; use the general solver");
  }
  const RiskModel model =
      make_risk_model(market, utility, cfg, periods * delta, options.quadrature);
  const ExposureBox box = options.box;
  const double g = utility.gamma;
  const double s = utility.orientation();
  const PowerReturnQuadrature returns(market, delta, options.quadrature);
  const ScalarOptimum merton = returns.best_beta(box.lo, box.hi, g);
  const double growth = std::exp(market.r * delta * (1.0 - g));

  DiscreteSolution sol = empty_solution(utility, periods, delta);
  sol.relative = true;
  sol.wealth = Eigen::VectorXd::Ones(1);
  sol.d = Eigen::VectorXd::Ones(periods + 1);
  sol.policy_beta.resize(periods, 1);
  sol.policy_zeta.resize(periods, 1);

  // The feasible set must not depend on wealth for d to be x-independent.
  for (int n : {0, periods - 1}) {
    const double t = n * delta;
    const RiskEvaluator r1(model, Regime::Discrete, t, 1.0);
    const RiskEvaluator r2(model, Regime::Discrete, t, 2.0);
    const auto f1 = state_feasibility(r1, box, utility.consumption, t, 1.0);
    const auto f2 = state_feasibility(r2, box, utility.consumption, t, 2.0);
    const auto i1 = beta_interval(r1, box, f1, 0.0);
    const auto i2 = beta_interval(r2, box, f2, 0.0);
    if (std::abs(f1.zeta_hi - f2.zeta_hi) > 1e-8 || std::abs(i1.lo - i2.lo) > 1e-8 ||
        std::abs(i1.hi - i2.hi) > 1e-8) {
      throw ConfigError("feasible set depends on wealth; use the general solver");
    }
  }

  for (int n = periods - 1; n >= 0; --n) {
    const double t = sol.times[n];
    const double carry = growth * sol.d[n + 1];
    auto total = [&](double zeta, double v) {
      const double kept = std::pow(1.0 - zeta, 1.0 - g) * carry * v;
      return utility.consumption ? std::pow(zeta, 1.0 - g) + kept : kept;
    };
    const double zeta_u =
        utility.consumption ? 1.0 / (1.0 + std::pow(carry * merton.value, 1.0 / g)) : 0.0;

    const RiskEvaluator risk(model, Regime::Discrete, t, 1.0);
    double beta = merton.arg;
    double zeta = zeta_u;
    if (!risk.feasible(beta, zeta)) {
      const StateFeasibility sf = state_feasibility(risk, box, utility.consumption, t, 1.0);
      // E[(1 + beta R)^{1-g}] is concave (convex for g > 1) in beta, so the
      // best feasible beta is the unconstrained one clipped to B(zeta).
      auto beta_of = [&](double z) { return clip_beta(risk, box, sf, z, merton.arg); };
      if (utility.consumption) {
        zeta = golden_section_max(
                   [&](double z) { return s * total(z, returns.expectation(beta_of(z), g)); },
                   0.0, sf.zeta_hi, kTol)
                   .arg;
      } else {
        zeta = 0.0;
      }
      beta = beta_of(zeta);
    }
    sol.policy_beta(n, 0) = beta;
    sol.policy_zeta(n, 0) = zeta;
    sol.d[n] = total(zeta, beta == merton.arg ? merton.value : returns.expectation(beta, g));
  }
  sol.value.resize(periods + 1, 1);
  for (int n = 0; n <= periods; ++n) sol.value(n, 0) = power_value(1.0, g, sol.d[n]);
  return sol;
}

DiscreteSolution solve_general(const MarketParams& market, const UtilityPower& utility,
                               const RiskConstraintConfig& cfg_in, int periods,
                               double delta, const WealthGrid& grid,
                               const SolveOptions& options) {
  const RiskConstraintConfig cfg = with_period(cfg_in, delta);
  check_inputs(market, utility, cfg, periods, delta, options);
  grid.validate();
  const RiskModel model =
      make_risk_model(market, utility, cfg, periods * delta, options.quadrature);
  const ExposureBox box = options.box;
  const double g = utility.gamma;
  const PowerReturnQuadrature returns(market, delta, options.quadrature);
  const Eigen::Index q = returns.returns().size();
  const Eigen::VectorXd& w = returns.weights();

  const int nx = grid.nodes;
  const double y0 = std::log(grid.x_min);
  const double dy = (std::log(grid.x_max) - y0) / (nx - 1);
  const double y_max = y0 + dy * (nx - 1);
  const double log_growth = market.r * delta;

  DiscreteSolution sol = empty_solution(utility, periods, delta);
  sol.relative = false;
  sol.wealth.resize(nx);
  for (int j = 0; j < nx; ++j) sol.wealth[j] = std::exp(y0 + j * dy);
  sol.wealth[0] = grid.x_min;
  sol.wealth[nx - 1] = grid.x_max;
  sol.value.resize(periods + 1, nx);
  sol.policy_beta.resize(periods, nx);
  sol.policy_zeta.resize(periods, nx);
  for (int j = 0; j < nx; ++j) sol.value(periods, j) = power_value(sol.wealth[j], g, 1.0);

  const double check_floor = 4.0 * grid.x_min;

  for (int n = periods - 1; n >= 0; --n) {
    const double t = sol.times[n];
    const Eigen::VectorXd next = sol.value.row(n + 1).transpose();
    const UniformPchip<double> interp(y0, dy, next);
    const double v_lo = next[0];
    const double v_hi = next[nx - 1];
    // Continuation value at log-wealth y, power asymptote off the grid.
    auto cont = [&](double y) {
      if (y < y0) return v_lo * std::exp((1.0 - g) * (y - y0));
      if (y > y_max) return v_hi * std::exp((1.0 - g) * (y - y_max));
      return interp(y);
    };

    parallel_for(static_cast<std::size_t>(nx), options.threads, [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      const double x = sol.wealth[j];
      const RiskEvaluator risk(model, Regime::Discrete, t, x);
      const StateFeasibility sf = state_feasibility(risk, box, utility.consumption, t, x);

      auto expected = [&](double zeta, double beta) {
        const double base = log_growth + std::log((1.0 - zeta) * x);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
          acc += w[i] * cont(base + std::log1p(beta * returns.returns()[i]));
        }
        return acc;
      };
      auto inner = [&](double zeta) {
        const ExposureInterval iv = beta_interval(risk, box, sf, zeta);
        return brent_max([&](double b) { return expected(zeta, b); }, iv.lo, iv.hi,
                         kSearchTol);
      };
      double zeta = 0.0;
      if (utility.consumption) {
        const double hi = std::min(sf.zeta_hi, 1.0 - 1e-9);
        zeta = brent_max(
                   [&](double z) { return utility.consumption_utility(z * x) + inner(z).value; },
                   0.0, hi, kSearchTol)
                   .arg;
      }
      const ScalarOptimum best = inner(zeta);
      sol.policy_zeta(n, j) = zeta;
      sol.policy_beta(n, j) = best.arg;
      sol.value(n, j) = utility.consumption_utility(zeta * x) + best.value;

      if (x >= check_floor && x <= grid.x_max) {
        const double scale = std::exp(log_growth) * (1.0 - zeta) * x;
        double below = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
          if (scale * (1.0 + best.arg * returns.returns()[i]) < grid.x_min) below += w[i];
        }
        if (below > 1e-8) {
          throw NumericalError("next-period wealth leaves the grid with probability " +
                               std::to_string(below) + " at " + node_text(t, x) +
                               "; widen the wealth grid");
        }
      }
    });
  }
  return sol;
}

}  // namespace dynrisk::mdp
