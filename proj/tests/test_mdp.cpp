#include <doctest.h>

#include <cmath>

#include "dynrisk/mdp.hpp"
#include "dynrisk/merton.hpp"
#include "dynrisk/optimize.hpp"
#include "oracles.hpp"

using namespace dynrisk;

namespace {

const MarketParams kMarket;
const UtilityPower kUtility{0.3, true};
constexpr double kDelta = 1.0 / 24.0;

RiskConstraintConfig var_config(RiskBound bound, double delta = kDelta) {
  return {RiskMeasure::var(0.01), MertonExpectation{}, bound, delta};
}

}  // namespace

TEST_SUITE("mdp") {

TEST_CASE("no bound reproduces the discrete Merton solution") {
  const auto sol = mdp::solve_relative(kMarket, kUtility, var_config(RiskBound::none()), 48, kDelta);
  const MertonDiscrete m = merton_discrete(kMarket, kUtility, 48, kDelta);
  CHECK((sol.d - m.d).cwiseAbs().maxCoeff() <= 1e-8);
  for (int n = 0; n < 48; ++n) {
    CHECK(std::abs(sol.policy_beta(n, 0) - m.beta[n]) <= 1e-8);
    CHECK(std::abs(sol.policy_zeta(n, 0) - m.zeta[n]) <= 1e-8);
  }
}

TEST_CASE("VaR bound cuts the stock share, not consumption") {
  const auto cfg = var_config(RiskBound::relative(0.05));
  const auto sol = mdp::solve_relative(kMarket, kUtility, cfg, 48, kDelta);
  const MertonDiscrete m = merton_discrete(kMarket, kUtility, 48, kDelta);
  const RiskModel model = make_risk_model(kMarket, kUtility, cfg, 2.0);
  for (int n = 0; n < 48; ++n) {
    const double beta = sol.policy_beta(n, 0);
    const double zeta = sol.policy_zeta(n, 0);
    CHECK(beta < m.beta[n]);
    if (n == 0) CHECK(beta < 0.5);
    CHECK(std::abs(zeta / m.zeta[n] - 1.0) < 0.1);
    CHECK(risk_of_control(model, Regime::Discrete, sol.times[n], 1.0, beta, zeta) <= 0.05 + 1e-8);
    CHECK(sol.d[n] >= std::max(1.0, sol.d[n + 1]));
  }
  CHECK(sol.value_at(0, 2.5) == doctest::Approx(std::pow(2.5, 0.7) * sol.value_at(0, 1.0)).epsilon(1e-13));
}

TEST_CASE("dominance and monotonicity of the d coefficients") {
  Eigen::VectorXd previous = Eigen::VectorXd::Zero(25);
  for (double lambda : {0.0, 0.03, 0.05, 0.1}) {
    const auto sol = mdp::solve_relative(kMarket, kUtility, var_config(RiskBound::relative(lambda)), 24, kDelta);
    CHECK(((sol.d - previous).array() >= -1e-10).all());
    previous = sol.d;
  }
  const MertonDiscrete m = merton_discrete(kMarket, kUtility, 24, kDelta);
  CHECK(((m.d - previous).array() >= -1e-10).all());
}

// Two periods of the constrained problem by exhaustive search: consumption
// on a fine grid, stock share scanned on a grid plus the exact constraint
// boundary, expectations by Simpson integration.
TEST_CASE("two-period problem matches brute force") {
  const double delta = 0.5;
  const double gamma = 0.3;
  for (double lambda : {0.02, 0.08}) {
    const auto cfg = var_config(RiskBound::relative(lambda), delta);
    const auto sol = mdp::solve_relative(kMarket, kUtility, cfg, 2, delta);
    const RiskModel model = make_risk_model(kMarket, kUtility, cfg, 1.0);
    const double growth = std::exp(0.1 * delta * (1 - gamma));
    auto expectation = [&](double beta) { return oracle::power_return(beta, gamma, delta, 0.1, 0.18, 0.35); };
    double d_next = 1.0;
    for (int n = 1; n >= 0; --n) {
      const double t = n * delta;
      double best = -1e300;
      for (int i = 0; i <= 400; ++i) {
        const double zeta = 0.2 + 0.6 * i / 400.0;
        auto ok = [&](double b) { return is_feasible(model, Regime::Discrete, t, 1.0, b, zeta); };
        if (!ok(0.0)) continue;
        const double b_hi = ok(1.0) ? 1.0 : bisect_boundary(ok, 0.0, 1.0, 1e-13);
        double inner = expectation(b_hi);
        for (int j = 0; j <= 50; ++j) {
          const double b = b_hi * j / 50.0;
          inner = std::max(inner, expectation(b));
        }
        best = std::max(best, std::pow(zeta, 1 - gamma) + std::pow(1 - zeta, 1 - gamma) * growth * inner * d_next);
      }
      // The consumption grid costs O(h^2) at a smooth optimum.
      CHECK(sol.d[n] == doctest::Approx(best).epsilon(2e-6));
      CHECK(sol.d[n] >= best - 1e-9);
      d_next = sol.d[n];
    }
  }
}

TEST_CASE("general recursion agrees with the d-recursion") {
  const auto cfg = var_config(RiskBound::relative(0.05));
  const mdp::WealthGrid grid{0.05, 20.0, 161};
  const auto gen = mdp::solve_general(kMarket, kUtility, cfg, 6, kDelta, grid);
  const auto rel = mdp::solve_relative(kMarket, kUtility, cfg, 6, kDelta);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < gen.wealth.size(); ++j) {
    const double x = gen.wealth[j];
    if (x < 0.2 || x > 5.0) continue;
    worst = std::max(worst, std::abs(gen.value(0, j) / rel.value_at(0, x) - 1.0));
    CHECK(std::abs(gen.policy_beta(0, j) - rel.policy_beta(0, 0)) < 1e-4);
  }
  CHECK(worst < 0.005);
}

TEST_CASE("absolute bound: stock share decreases with wealth above 1") {
  auto cfg = var_config(RiskBound::absolute(0.05));
  const auto sol = mdp::solve_general(kMarket, kUtility, cfg, 6, kDelta, mdp::WealthGrid{0.05, 20.0, 161});
  int checked = 0;
  for (Eigen::Index j = 0; j + 1 < sol.wealth.size(); ++j) {
    const double x = sol.wealth[j];
    if (x <= 1.0 || sol.wealth[j + 1] >= 5.0) continue;
    CHECK(sol.policy_beta(0, j + 1) < sol.policy_beta(0, j));
    ++checked;
  }
  CHECK(checked > 10);
  CHECK_THROWS_AS(mdp::solve_relative(kMarket, kUtility, cfg, 6, kDelta), ConfigError);
}

TEST_CASE("infeasible configuration") {
  RiskConstraintConfig cfg{RiskMeasure::var(0.01), FractionOfWealth{1.2}, RiskBound::relative(0.0), 0.25};
  CHECK_THROWS_AS(mdp::solve_relative(kMarket, kUtility, cfg, 4, 0.25), InfeasibleError);
  CHECK_THROWS_AS((mdp::WealthGrid{1.0, 0.5, 10}.validate()), ConfigError);
}

TEST_CASE("value extrapolation beyond the grid") {
  const auto sol = mdp::solve_general(kMarket, kUtility, var_config(RiskBound::none()), 2, kDelta,
                                      mdp::WealthGrid{0.1, 10.0, 81});
  const MertonDiscrete m = merton_discrete(kMarket, kUtility, 2, kDelta);
  for (double x : {0.01, 0.1, 3.0, 10.0, 50.0}) {
    CHECK(sol.value_at(0, x) == doctest::Approx(std::pow(x, 0.7) / 0.7 * m.d[0]).epsilon(1e-6));
  }
}

}  // TEST_SUITE
