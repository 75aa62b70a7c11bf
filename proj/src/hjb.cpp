#include "dynrisk/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dynrisk/errors.hpp"
#include "dynrisk/interpolation.hpp"
#include "dynrisk/merton.hpp"
#include "dynrisk/optimize.hpp"
#include "dynrisk/parallel.hpp"
#include "dynrisk/tridiagonal.hpp"

namespace dynrisk::hjb {

namespace {

constexpr double kExposureTol = 1e-10;
constexpr double kConsumptionTol = 1e-10;

std::string node_text(double t, double x) {
  return "t=" + std::to_string(t) + ", x=" + std::to_string(x);
}

double power_value(double x, double gamma, double coefficient) {
  return std::pow(x, 1.0 - gamma) / (1.0 - gamma) * coefficient;
}

}  // namespace

void ControlBox::validate() const {
  if (!(pi_min < pi_max)) throw ConfigError("control box needs pi_min < pi_max");
  if (!(c_max > 0.0)) throw ConfigError("control box needs c_max > 0");
}

void GridSpec::validate() const {
  if (t_steps < 2 || x_steps < 3) throw ConfigError("grid needs t_steps >= 2, x_steps >= 3");
  if (!(x_min > 0.0 && x_min < x_max)) throw ConfigError("grid needs 0 < x_min < x_max");
}

double ContinuousSolution::value_at(double t, double x) const {
  const double t0 = times[0];
  const double dt = this->dt();
  if (relative) {
    return power_value(x, gamma, uniform_linear(h, t0, dt, t));
  }
  const double y0 = std::log(wealth[0]);
  const double dy = (std::log(wealth[wealth.size() - 1]) - y0) / double(wealth.size() - 1);
  const double s = std::clamp((t - t0) / dt, 0.0, double(times.size() - 1));
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), times.size() - 2);
  const double u = s - double(k);
  const double lo = uniform_linear(value.row(k).transpose(), y0, dy, std::log(x));
  const double hi = uniform_linear(value.row(k + 1).transpose(), y0, dy, std::log(x));
  return (1.0 - u) * lo + u * hi;
}

Control ContinuousSolution::policy_at(double t, double x) const {
  const Eigen::Index rows = policy_pi.rows();
  auto k = static_cast<Eigen::Index>(std::floor((t - times[0]) / dt() + 1e-9));
  k = std::clamp<Eigen::Index>(k, 0, rows - 1);
  if (policy_pi.cols() == 1) return {policy_pi(k, 0), policy_c(k, 0)};
  const double y0 = std::log(wealth[0]);
  const double dy = (std::log(wealth[wealth.size() - 1]) - y0) / double(wealth.size() - 1);
  const double y = std::log(x);
  return {uniform_linear(policy_pi.row(k).transpose(), y0, dy, y),
          uniform_linear(policy_c.row(k).transpose(), y0, dy, y)};
}

NodeFeasibility node_feasibility(const RiskModel& model, const UtilityPower& utility,
                                 const ControlBox& box, double t, double x) {
  NodeFeasibility nf;
  const RiskEvaluator risk(model, Regime::Continuous, t, x);
  if (risk.unbounded()) {
    nf.c_hi = utility.consumption ? box.c_max : 0.0;
    nf.center = std::numeric_limits<double>::quiet_NaN();
    return nf;
  }
  nf.constrained = true;
  const double eps = risk.bound();
  auto least_risk = [&](double c) {
    return golden_section_min([&](double pi) { return risk(pi, c); }, box.pi_min,
                              box.pi_max, kExposureTol);
  };
  const ScalarOptimum zero = least_risk(0.0);
  if (!(zero.value <= eps)) {
    throw InfeasibleError("no feasible control at " + node_text(t, x));
  }
  nf.center = zero.arg;
  if (!utility.consumption) return nf;

  // The risk increases with c, so the feasible rates form [0, c_hi] where
  // c_hi solves min_pi risk(pi, c) = eps. Solve risk(center, c) = eps for a
  // lower estimate, re-centre at the new rate and repeat; the minimiser does
  // not move with c for VaR and TCE, so one pass is usually enough.
  double c_lo = 0.0;
  double center = nf.center;
  for (int pass = 0; pass < 50; ++pass) {
    if (risk(center, box.c_max) <= eps) {
      c_lo = box.c_max;
      break;
    }
    c_lo = boundary_root([&](double c) { return risk(center, c) - eps; }, c_lo, box.c_max,
                         kConsumptionTol);
    const ScalarOptimum least = least_risk(c_lo);
    if (std::abs(least.arg - center) <= kExposureTol || !(least.value < eps)) break;
    center = least.arg;
  }
  nf.c_hi = c_lo;
  return nf;
}

HamiltonianMax hamiltonian_argmax(const RiskModel& model, const UtilityPower& utility,
                                  const ControlBox& box, double t, double x, double v_x,
                                  double v_xx, const NodeFeasibility* feasibility) {
  const auto& mk = model.market;
  const double ex = mk.excess_return();
  const double s2 = mk.sigma * mk.sigma;
  if (!(v_xx < 0.0)) v_xx = -1e-12 * v_x / x;

  auto objective = [&](double pi, double c) {
    return utility.consumption_utility(c * x) + x * (pi * ex + mk.r - c) * v_x +
           0.5 * x * x * pi * pi * s2 * v_xx;
  };
  const double pi_u = std::clamp(-ex * v_x / (x * s2 * v_xx), box.pi_min, box.pi_max);
  const double c_u =
      utility.consumption
          ? std::clamp(std::pow(v_x, -1.0 / utility.gamma) / x, 0.0, box.c_max)
          : 0.0;

  const RiskEvaluator risk(model, Regime::Continuous, t, x);
  if (risk.feasible(pi_u, c_u)) return {pi_u, c_u, objective(pi_u, c_u)};
  const double eps = risk.bound();

  const NodeFeasibility nf =
      feasibility ? *feasibility : node_feasibility(model, utility, box, t, x);

  // Concave objective in pi: the constrained maximiser is pi_u clipped to the
  // feasible interval, i.e. the endpoint between the interval and pi_u.
  auto best_pi = [&](double c) {
    if (risk(pi_u, c) <= eps) return pi_u;
    double center = nf.center;
    if (!(risk(center, c) <= eps)) {
      center = golden_section_min([&](double pi) { return risk(pi, c); }, box.pi_min,
                                  box.pi_max, kExposureTol)
                   .arg;
    }
    return boundary_root([&](double pi) { return risk(pi, c) - eps; }, center, pi_u,
                         kExposureTol);
  };

  if (!utility.consumption) {
    const double pi = best_pi(0.0);
    return {pi, 0.0, objective(pi, 0.0)};
  }
  const ScalarOptimum best = golden_section_max(
      [&](double c) { return objective(best_pi(c), c); }, 0.0, nf.c_hi, kConsumptionTol);
  const double pi = best_pi(best.arg);
  return {pi, best.arg, objective(pi, best.arg)};
}

namespace {

void check_inputs(const MarketParams& market, const UtilityPower& utility,
                  const RiskConstraintConfig& cfg, double horizon, const ControlBox& box) {
  market.validate();
  utility.validate();
  cfg.validate();
  box.validate();
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
}

}  // namespace

ContinuousSolution solve_relative(const MarketParams& market, const UtilityPower& utility,
                                  const RiskConstraintConfig& cfg, double horizon,
                                  int t_steps, const ControlBox& box,
                                  const RelativeOptions& options) {
  check_inputs(market, utility, cfg, horizon, box);
  if (t_steps < 1) throw ConfigError("t_steps must be >= 1");
  if (options.check_homogeneity && !cfg.bound.unbounded() && !cfg.homogeneous()) {
    throw ConfigError(
        "risk configuration is not homogeneous in wealth; use the general solver");
  }
  const RiskModel model = make_risk_model(market, utility, cfg, horizon);
  const double g = utility.gamma;
  const double x = options.reference_wealth;
  const double scale = std::pow(x, 1.0 - g);

  auto argmax = [&](double t, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw NumericalError("value coefficient left (0, inf) at t=" + std::to_string(t));
    }
    const double v_x = std::pow(x, -g) * h;
    const double v_xx = -g * std::pow(x, -g - 1.0) * h;
    return hamiltonian_argmax(model, utility, box, t, x, v_x, v_xx);
  };
  // -h'(t) = (1 - g) S(t, h)
  auto rate = [&](double t, double h) { return (1.0 - g) * argmax(t, h).value / scale; };

  const double dt = horizon / t_steps;
  ContinuousSolution sol;
  sol.gamma = g;
  sol.relative = true;
  sol.times = Eigen::VectorXd::LinSpaced(t_steps + 1, 0.0, horizon);
  sol.wealth = Eigen::VectorXd::Constant(1, x);
  sol.h.resize(t_steps + 1);
  sol.h[t_steps] = 1.0;
  for (int k = t_steps; k > 0; --k) {
    const double t = sol.times[k];
    const double h = sol.h[k];
    const double k1 = rate(t, h);
    const double k2 = rate(t - 0.5 * dt, h + 0.5 * dt * k1);
    const double k3 = rate(t - 0.5 * dt, h + 0.5 * dt * k2);
    const double k4 = rate(t - dt, h + dt * k3);
    sol.h[k - 1] = h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  sol.value.resize(t_steps + 1, 1);
  sol.policy_pi.resize(t_steps, 1);
  sol.policy_c.resize(t_steps, 1);
  for (int k = 0; k <= t_steps; ++k) sol.value(k, 0) = power_value(x, g, sol.h[k]);
  for (int k = 0; k < t_steps; ++k) {
    const HamiltonianMax u = argmax(sol.times[k], sol.h[k]);
    sol.policy_pi(k, 0) = u.pi;
    sol.policy_c(k, 0) = u.c;
  }
  sol.iterations = 1;
  sol.residual = hjb_residual(sol, market, utility, cfg, horizon, box);
  return sol;
}

ContinuousSolution solve_general(const MarketParams& market, const UtilityPower& utility,
                                 const RiskConstraintConfig& cfg, double horizon,
                                 const GridSpec& grid, const ControlBox& box,
                                 const GeneralOptions& options) {
  check_inputs(market, utility, cfg, horizon, box);
  grid.validate();
  const double g = utility.gamma;
  const int nt = grid.t_steps;
  const int nx = grid.x_steps;
  const int inner = nx - 2;
  const double dt = horizon / nt;
  const double y0 = std::log(grid.x_min);
  const double dy = (std::log(grid.x_max) - y0) / (nx - 1);

  ContinuousSolution sol;
  sol.gamma = g;
  sol.relative = false;
  sol.times = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, horizon);
  sol.wealth.resize(nx);
  for (int j = 0; j < nx; ++j) sol.wealth[j] = std::exp(y0 + j * dy);
  sol.wealth[0] = grid.x_min;
  sol.wealth[nx - 1] = grid.x_max;
  const Eigen::VectorXd& xs = sol.wealth;

  // Boundary asymptotes from the separable solver at the boundary wealth.
  const ContinuousSolution lo = solve_relative(market, utility, cfg, horizon, nt, box,
                                               {grid.x_min, false});
  const ContinuousSolution hi = solve_relative(market, utility, cfg, horizon, nt, box,
                                               {grid.x_max, false});

  const RiskModel model = make_risk_model(market, utility, cfg, horizon);
  const MertonContinuous merton = merton_continuous(market, utility, horizon);

  const auto nodes = static_cast<std::size_t>(nt) * inner;
  std::vector<NodeFeasibility> feas(nodes);
  parallel_for(nodes, options.threads, [&](std::size_t i) {
    const int k = static_cast<int>(i / inner);
    const int j = static_cast<int>(i % inner) + 1;
    feas[i] = node_feasibility(model, utility, box, sol.times[k], xs[j]);
  });

  Eigen::MatrixXd pi(nt, nx), c(nt, nx);
  for (int k = 0; k < nt; ++k) {
    pi(k, 0) = lo.policy_pi(k, 0);
    c(k, 0) = lo.policy_c(k, 0);
    pi(k, nx - 1) = hi.policy_pi(k, 0);
    c(k, nx - 1) = hi.policy_c(k, 0);
  }
  // Merton policy projected onto the feasible set.
  parallel_for(nodes, options.threads, [&](std::size_t i) {
    const int k = static_cast<int>(i / inner);
    const int j = static_cast<int>(i % inner) + 1;
    const double t = sol.times[k];
    const NodeFeasibility& nf = feas[i];
    const double c0 = std::min(merton.consumption_rate(t), nf.c_hi);
    double p0 = std::clamp(merton.pi_m, box.pi_min, box.pi_max);
    if (nf.constrained) {
      IntervalOptions io;
      io.hint = nf.center;
      io.check_samples = 0;
      const ExposureInterval iv =
          feasible_interval(model, Regime::Continuous, t, xs[j], c0, box.exposure(), io);
      if (iv.empty) throw InfeasibleError("no feasible control at " + node_text(t, xs[j]));
      p0 = iv.clamp(p0);
    }
    pi(k, j) = p0;
    c(k, j) = c0;
  });

  // Weights of V_{j-1} - V_j and V_{j+1} - V_j in the generator (log-wealth
  // coordinates). Central differences unless a weight would turn negative,
  // in which case the drift is upwinded to keep the M-matrix property.
  const double a_scale = 0.5 * market.sigma * market.sigma;
  auto stencil = [&](double p, double q) {
    const double a = a_scale * p * p;
    const double b = market.r + p * market.excess_return() - q - a;
    double wl = a / (dy * dy) - b / (2.0 * dy);
    double wu = a / (dy * dy) + b / (2.0 * dy);
    if (wl < 0.0 || wu < 0.0) {
      wl = a / (dy * dy) + std::max(-b, 0.0) / dy;
      wu = a / (dy * dy) + std::max(b, 0.0) / dy;
    }
    return std::pair{wl, wu};
  };
  auto evaluate = [&](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    Eigen::MatrixXd v(nt + 1, nx);
    for (int j = 0; j < nx; ++j) v(nt, j) = power_value(xs[j], g, 1.0);
    Eigen::VectorXd lower(inner), diag(inner), upper(inner), rhs(inner);
    for (int k = nt - 1; k >= 0; --k) {
      const double v_lo = lo.value(k, 0);
      const double v_hi = hi.value(k, 0);
      v(k, 0) = v_lo;
      v(k, nx - 1) = v_hi;
      for (int i = 0; i < inner; ++i) {
        const int j = i + 1;
        const auto [wl, wu] = stencil(p(k, j), q(k, j));
        lower[i] = -dt * wl;
        upper[i] = -dt * wu;
        diag[i] = 1.0 + dt * (wl + wu);
        rhs[i] = v(k + 1, j) + dt * utility.consumption_utility(q(k, j) * xs[j]);
        if (j == 1) rhs[i] += dt * wl * v_lo;
        if (j == nx - 2) rhs[i] += dt * wu * v_hi;
      }
      v.row(k).segment(1, inner) = solve_tridiagonal(lower, diag, upper, rhs).transpose();
    }
    return v;
  };

  auto improve = [&](const Eigen::MatrixXd& v, Eigen::MatrixXd& p, Eigen::MatrixXd& q) {
    double change = 0.0;
    std::vector<double> node_change(nodes, 0.0);
    parallel_for(nodes, options.threads, [&](std::size_t i) {
      const int k = static_cast<int>(i / inner);
      const int j = static_cast<int>(i % inner) + 1;
      const double vy = (v(k, j + 1) - v(k, j - 1)) / (2.0 * dy);
      const double vyy = (v(k, j + 1) - 2.0 * v(k, j) + v(k, j - 1)) / (dy * dy);
      const double x = xs[j];
      const double v_x = vy / x;
      if (!(v_x > 0.0)) {
        throw NumericalError("value not increasing in wealth at " +
                             node_text(sol.times[k], x));
      }
      const HamiltonianMax u = hamiltonian_argmax(model, utility, box, sol.times[k], x, v_x,
                                                  (vyy - vy) / (x * x), &feas[i]);
      // The maximiser is exact for the central stencil. Where the evaluation
      // upwinds, keep the old control unless the new one is at least as good
      // for the operator actually used, so every sweep stays an improvement.
      auto discrete_h = [&](double p_, double q_) {
        const auto [wl, wu] = stencil(p_, q_);
        return utility.consumption_utility(q_ * x) + wl * (v(k, j - 1) - v(k, j)) +
               wu * (v(k, j + 1) - v(k, j));
      };
      if (discrete_h(u.pi, u.c) < discrete_h(p(k, j), q(k, j))) {
        node_change[i] = 0.0;
        return;
      }
      node_change[i] = std::max(std::abs(u.pi - p(k, j)), std::abs(u.c - q(k, j)));
      p(k, j) = u.pi;
      q(k, j) = u.c;
    });
    for (double d : node_change) change = std::max(change, d);
    return change;
  };

  Eigen::MatrixXd v = evaluate(pi, c);
  int iter = 0;
  while (iter < options.max_iterations) {
    ++iter;
    const double change = improve(v, pi, c);
    Eigen::MatrixXd next = evaluate(pi, c);
    for (int k = 0; k <= nt; ++k) {
      for (int j = 0; j < nx; ++j) {
        if (next(k, j) < v(k, j) - 1e-8 * (1.0 + std::abs(v(k, j)))) {
          throw NumericalError("policy improvement decreased the value at " +
                               node_text(sol.times[k], xs[j]) + " in sweep " +
                               std::to_string(iter));
        }
      }
    }
    v = std::move(next);
    if (change < options.policy_tolerance) break;
  }

  sol.value = std::move(v);
  sol.policy_pi = std::move(pi);
  sol.policy_c = std::move(c);
  sol.iterations = iter;
  sol.residual = std::numeric_limits<double>::quiet_NaN();
  return sol;
}

double hjb_residual(const ContinuousSolution& solution, const MarketParams& market,
                    const UtilityPower& utility, const RiskConstraintConfig& cfg,
                    double horizon, const ControlBox& box) {
  const RiskModel model = make_risk_model(market, utility, cfg, horizon);
  const double g = solution.gamma;
  const double dt = solution.dt();
  const Eigen::Index nt = solution.times.size() - 1;
  double worst = 0.0;

  if (solution.relative) {
    const double x = solution.wealth[0];
    for (Eigen::Index n = 0; n < nt; ++n) {
      const double h = 0.5 * (solution.h[n] + solution.h[n + 1]);
      const double v_x = std::pow(x, -g) * h;
      const double v_xx = -g * std::pow(x, -g - 1.0) * h;
      const double t = solution.times[n] + 0.5 * dt;
      const double sup = hamiltonian_argmax(model, utility, box, t, x, v_x, v_xx).value;
      const double v_t = (solution.value(n + 1, 0) - solution.value(n, 0)) / dt;
      worst = std::max(worst, std::abs(v_t + sup));
    }
    return worst;
  }

  const Eigen::Index nx = solution.wealth.size();
  const double y0 = std::log(solution.wealth[0]);
  const double dy = (std::log(solution.wealth[nx - 1]) - y0) / double(nx - 1);
  const Eigen::MatrixXd& v = solution.value;
  for (Eigen::Index n = 0; n < nt; ++n) {
    const double t = solution.times[n] + 0.5 * dt;
    for (Eigen::Index j = 1; j + 1 < nx; ++j) {
      double vy = 0.0;
      double vyy = 0.0;
      for (Eigen::Index m : {n, n + 1}) {
        vy += 0.5 * (v(m, j + 1) - v(m, j - 1)) / (2.0 * dy);
        vyy += 0.5 * (v(m, j + 1) - 2.0 * v(m, j) + v(m, j - 1)) / (dy * dy);
      }
      const double x = solution.wealth[j];
      const double sup =
          hamiltonian_argmax(model, utility, box, t, x, vy / x, (vyy - vy) / (x * x)).value;
      worst = std::max(worst, std::abs((v(n + 1, j) - v(n, j)) / dt + sup));
    }
  }
  return worst;
}

}  // namespace dynrisk::hjb
