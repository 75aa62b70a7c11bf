#include <doctest.h>

#include <cmath>

#include "dynrisk/hjb.hpp"
#include "dynrisk/merton.hpp"

using namespace dynrisk;

namespace {

const MarketParams kMarket;
const UtilityPower kUtility{0.3, true};

RiskConstraintConfig var_config(RiskBound bound) {
  return {RiskMeasure::var(0.01), MertonExpectation{}, bound, 1.0 / 24.0};
}

double max_feasibility_excess(const hjb::ContinuousSolution& sol, const RiskConstraintConfig& cfg,
                              Eigen::Index j_begin, Eigen::Index j_end) {
  const RiskModel model = make_risk_model(kMarket, kUtility, cfg, 2.0);
  double worst = -1e300;
  for (Eigen::Index k = 0; k < sol.policy_pi.rows(); ++k) {
    for (Eigen::Index j = j_begin; j < j_end; ++j) {
      const double x = sol.wealth[j];
      const double risk = risk_continuous(model, sol.times[k], x, sol.policy_pi(k, j), sol.policy_c(k, j));
      worst = std::max(worst, risk - cfg.bound.evaluate(x));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("hjb") {

TEST_CASE("relative solver without a bound reproduces Merton") {
  const auto sol = hjb::solve_relative(kMarket, kUtility, var_config(RiskBound::none()), 2.0, 240);
  const MertonContinuous m = merton_continuous(kMarket, kUtility, 2.0);
  for (int k = 0; k < 240; k += 17) {
    CHECK(std::abs(sol.policy_pi(k, 0) - m.pi_m) <= 1e-4);
    CHECK(std::abs(sol.policy_c(k, 0) - m.consumption_rate(sol.times[k])) <= 1e-4);
  }
  CHECK(sol.h[0] == doctest::Approx(m.value_coefficient(0.0)).epsilon(1e-7));
  CHECK(sol.residual < 1e-5);
}

TEST_CASE("relative VaR bound reduces the stock proportion") {
  const auto cfg = var_config(RiskBound::relative(0.05));
  const auto sol = hjb::solve_relative(kMarket, kUtility, cfg, 2.0, 240);
  const double pi_m = merton_continuous(kMarket, kUtility, 2.0).pi_m;
  CHECK(sol.policy_pi.maxCoeff() < 0.25 * pi_m);
  CHECK(sol.policy_pi.minCoeff() > 0.0);
  CHECK(max_feasibility_excess(sol, cfg, 0, 1) <= 1e-8);
  // Homogeneity of the stored value.
  for (double t : {0.0, 1.0, 1.9}) {
    CHECK(sol.value_at(t, 3.0) == doctest::Approx(std::pow(3.0, 0.7) * sol.value_at(t, 1.0)).epsilon(1e-12));
  }
  CHECK(sol.value_at(2.0, 1.7) == doctest::Approx(kUtility(1.7)).epsilon(1e-15));
}

TEST_CASE("value dominance and bound monotonicity") {
  double previous = 0.0;
  for (double lambda : {0.0, 0.02, 0.05, 0.1, 0.15}) {
    const auto sol = hjb::solve_relative(kMarket, kUtility, var_config(RiskBound::relative(lambda)), 2.0, 120);
    CHECK(sol.h[0] >= previous - 1e-10);
    previous = sol.h[0];
  }
  const auto free = hjb::solve_relative(kMarket, kUtility, var_config(RiskBound::none()), 2.0, 120);
  CHECK(free.h[0] >= previous - 1e-10);
}

TEST_CASE("Hamiltonian maximiser") {
  const auto cfg = var_config(RiskBound::relative(0.05));
  const RiskModel model = make_risk_model(kMarket, kUtility, cfg, 2.0);
  const hjb::ControlBox box;
  const double x = 1.0, h = 1.5;
  const double v_x = h, v_xx = -0.3 * h;
  const auto u = hjb::hamiltonian_argmax(model, kUtility, box, 0.5, x, v_x, v_xx);
  // Binding: pi is the upper end of the feasible interval at the chosen c.
  const auto iv = feasible_interval(model, Regime::Continuous, 0.5, x, u.c, box.exposure());
  CHECK(u.pi == doctest::Approx(iv.hi).epsilon(1e-7));
  auto objective = [&](double pi, double c) {
    return kUtility(c * x) + x * (pi * 0.08 + 0.1 - c) * v_x + 0.5 * x * x * pi * pi * 0.1225 * v_xx;
  };
  for (int i = 0; i <= 200; ++i) {
    const double pi = iv.lo + (iv.hi - iv.lo) * i / 200.0;
    CHECK(objective(pi, u.c) <= u.value + 1e-10);
  }
  // Outer objective in c has a zero slope at an interior optimum.
  auto outer = [&](double c) {
    const auto ivc = feasible_interval(model, Regime::Continuous, 0.5, x, c, box.exposure());
    return objective(std::min(ivc.hi, 0.08 / (0.3 * 0.1225)), c);
  };
  const double dc = 1e-4;
  CHECK(std::abs(outer(u.c + dc) - outer(u.c - dc)) / (2 * dc) < 1e-3);

  // Without a bound: analytic maximiser.
  const RiskModel free = make_risk_model(kMarket, kUtility, var_config(RiskBound::none()), 2.0);
  const auto w = hjb::hamiltonian_argmax(free, kUtility, box, 0.5, 2.0, 0.8, -0.12);
  CHECK(w.pi == doctest::Approx(-0.08 * 0.8 / (2.0 * 0.1225 * -0.12)));
  CHECK(w.c == doctest::Approx(std::pow(0.8, -1 / 0.3) / 2.0));
}

TEST_CASE("general solver recovers Merton without a bound") {
  const auto cfg = var_config(RiskBound::none());
  const auto sol = hjb::solve_general(kMarket, kUtility, cfg, 2.0, hjb::GridSpec{});
  const MertonContinuous m = merton_continuous(kMarket, kUtility, 2.0);
  const Eigen::Index nx = sol.wealth.size();
  double err_v = 0.0, err_pi = 0.0;
  for (Eigen::Index k = 0; k < sol.policy_pi.rows(); ++k) {
    for (Eigen::Index j = 1; j + 1 < nx; ++j) {
      err_v = std::max(err_v, std::abs(sol.value(k, j) / m.value(sol.times[k], sol.wealth[j]) - 1.0));
      err_pi = std::max(err_pi, std::abs(sol.policy_pi(k, j) - m.pi_m));
    }
  }
  CHECK(err_v < 0.01);
  CHECK(err_pi < 0.05);
  // Terminal slice is the bequest utility exactly.
  for (Eigen::Index j = 0; j < nx; ++j) CHECK(sol.value(sol.value.rows() - 1, j) == kUtility(sol.wealth[j]));
}

TEST_CASE("general solver with a relative bound") {
  const auto cfg = var_config(RiskBound::relative(0.05));
  const auto gen = hjb::solve_general(kMarket, kUtility, cfg, 2.0, hjb::GridSpec{120, 0.1, 10.0, 101});
  const auto rel = hjb::solve_relative(kMarket, kUtility, cfg, 2.0, 120);
  const Eigen::Index nx = gen.wealth.size();
  double worst = 0.0;
  for (Eigen::Index j = 1; j + 1 < nx; ++j) {
    const double x = gen.wealth[j];
    worst = std::max(worst, std::abs(gen.value(0, j) / rel.value_at(0.0, x) - 1.0));
    // Homogeneity of the grid solution: V(0, 2x) = 2^{1-g} V(0, x).
    if (x > 0.3 && x < 4.0) {
      CHECK(gen.value_at(0.0, 2 * x) == doctest::Approx(std::pow(2.0, 0.7) * gen.value_at(0.0, x)).epsilon(2e-3));
    }
  }
  CHECK(worst < 0.005);
  CHECK(max_feasibility_excess(gen, cfg, 1, nx - 1) <= 1e-8);
  // Nondecreasing and concave along every time slice.
  for (Eigen::Index k = 0; k < gen.value.rows(); ++k) {
    for (Eigen::Index j = 1; j + 1 < nx; ++j) {
      const double s0 = (gen.value(k, j) - gen.value(k, j - 1)) / (gen.wealth[j] - gen.wealth[j - 1]);
      const double s1 = (gen.value(k, j + 1) - gen.value(k, j)) / (gen.wealth[j + 1] - gen.wealth[j]);
      CHECK(s0 >= 0.0);
      CHECK(s1 - s0 <= 1e-6);
    }
  }
}

TEST_CASE("absolute bound: policy depends on wealth") {
  auto cfg = var_config(RiskBound::absolute(0.05));
  const auto sol = hjb::solve_general(kMarket, kUtility, cfg, 2.0, hjb::GridSpec{120, 0.1, 10.0, 101});
  cfg.bound = RiskBound::relative(0.05);
  const double pi_rel = hjb::solve_relative(kMarket, kUtility, cfg, 2.0, 120).policy_pi(0, 0);
  for (Eigen::Index j = 1; j + 1 < sol.wealth.size(); ++j) {
    const double x = sol.wealth[j];
    if (x < 0.95) CHECK(sol.policy_pi(0, j) > pi_rel);
    if (x > 1.0 && sol.wealth[j + 1] < 5.0) CHECK(sol.policy_pi(0, j + 1) < sol.policy_pi(0, j));
  }
  CHECK_THROWS_AS(hjb::solve_relative(kMarket, kUtility, var_config(RiskBound::absolute(0.05)), 2.0, 10),
                  ConfigError);
}

TEST_CASE("residual decreases under refinement") {
  const auto free = var_config(RiskBound::none());
  // Implicit Euler is first order in time: doubling t_steps halves the residual.
  const auto coarse = hjb::solve_general(kMarket, kUtility, free, 2.0, hjb::GridSpec{60, 0.1, 10.0, 201});
  const auto fine = hjb::solve_general(kMarket, kUtility, free, 2.0, hjb::GridSpec{120, 0.1, 10.0, 201});
  const double r0 = hjb::hjb_residual(coarse, kMarket, kUtility, free, 2.0);
  const double r1 = hjb::hjb_residual(fine, kMarket, kUtility, free, 2.0);
  CHECK(r1 <= 0.55 * r0);
  // Reduced equation integrated by RK4.
  const auto cfg = var_config(RiskBound::relative(0.05));
  const double q0 = hjb::solve_relative(kMarket, kUtility, cfg, 2.0, 30).residual;
  const double q1 = hjb::solve_relative(kMarket, kUtility, cfg, 2.0, 60).residual;
  CHECK(q1 <= 0.5 * q0);
}

TEST_CASE("infeasible and invalid configurations") {
  RiskConstraintConfig cfg{RiskMeasure::var(0.01), FractionOfWealth{1.2}, RiskBound::relative(0.0), 0.25};
  CHECK_THROWS_AS(hjb::solve_relative(kMarket, kUtility, cfg, 1.0, 8), InfeasibleError);
  CHECK_THROWS_AS(hjb::solve_relative(kMarket, kUtility, var_config(RiskBound::none()), 2.0, 0), ConfigError);
  CHECK_THROWS_AS((hjb::GridSpec{10, 1.0, 0.5, 11}.validate()), ConfigError);
  CHECK_THROWS_AS((hjb::ControlBox{1.0, -1.0, 1.0}.validate()), ConfigError);
}

}  // TEST_SUITE
