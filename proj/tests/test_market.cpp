#include <doctest.h>

#include <cmath>
#include <random>

#include "dynrisk/market.hpp"
#include "dynrisk/normal.hpp"
#include "oracles.hpp"

using namespace dynrisk;

TEST_SUITE("market") {

TEST_CASE("normal cdf and quantile agree with the bisection oracle") {
  for (double p : {1e-12, 1e-6, 0.001, 0.01, 0.05, 0.3, 0.5, 0.77, 0.99}) {
    const double z = norm_quantile(p);
    CHECK(z == doctest::Approx(oracle::quantile(p)).epsilon(1e-12));
    CHECK(norm_cdf(z) == doctest::Approx(p).epsilon(1e-13));
  }
  CHECK(norm_quantile(1 - 1e-9) == doctest::Approx(-norm_quantile(1e-9)).epsilon(1e-7));
  CHECK(norm_quantile(0.01) == doctest::Approx(-2.326347874040841).epsilon(1e-14));
  CHECK(std::isinf(norm_quantile(0.0)));
  CHECK(std::isnan(norm_quantile(1.5)));
  CHECK(norm_cdf(-37.0) > 0.0);
}

TEST_CASE("conditional wealth law matches the SDE solution") {
  const MarketParams mk;
  const double x = 1.7, pi = 0.8, c = 0.2, dt = 0.25;
  const LogNormalLaw law = conditional_wealth_law(x, pi, c, dt, mk);
  // E[X] = x exp((r + pi (mu - r) - c) dt) for a frozen proportion.
  CHECK(law.mean() == doctest::Approx(x * std::exp((0.1 + 0.8 * 0.08 - 0.2) * dt)).epsilon(1e-14));
  CHECK(law.s2 == doctest::Approx(pi * pi * 0.35 * 0.35 * dt));
  // Median of the law is the exact step at dW = 0.
  CHECK(law.quantile(0.5) == doctest::Approx(wealth_step_exact(x, pi, c, dt, 0.0, mk)));
  CHECK_THROWS_AS(conditional_wealth_law(0.0, pi, c, dt, mk), DomainError);
  CHECK_THROWS_AS(conditional_wealth_law(x, pi, c, 0.0, mk), DomainError);
  CHECK_THROWS_AS(conditional_wealth_law(x, pi, -0.1, dt, mk), DomainError);
}

TEST_CASE("sigma zero gives a degenerate law") {
  const MarketParams mk{0.05, 0.1, 0.0};
  const LogNormalLaw law = conditional_wealth_law(1.0, 1.0, 0.0, 1.0, mk);
  CHECK(law.degenerate());
  CHECK(law.mean() == doctest::Approx(std::exp(0.1)));
  CHECK_THROWS_AS(mk.validate(), ConfigError);
}

TEST_CASE("discrete wealth step") {
  const MarketParams mk;
  const double dt = 1.0 / 24.0;
  // Everything in the bond: deterministic growth of the kept wealth.
  CHECK(wealth_step_discrete(2.0, 0.0, 0.1, 1.3, dt, mk) ==
        doctest::Approx(1.8 * std::exp(0.1 * dt)));
  CHECK(wealth_step_discrete(2.0, 1.0, 0.0, 1.3, dt, mk) == doctest::Approx(2.6));
  const LogNormalLaw g = discrete_return_law(mk, dt);
  CHECK(g.mean() == doctest::Approx(std::exp(0.18 * dt)).epsilon(1e-14));
  CHECK(discounted_return(std::exp(0.1 * dt), mk, dt) == doctest::Approx(0.0));
}

TEST_CASE("simulation is reproducible and unbiased") {
  const MarketParams mk;
  SimulationSpec spec;
  spec.horizon = 1.0;
  spec.dt = 0.25;
  spec.n_paths = 20000;
  spec.seed = 7;
  const ControlPolicy policy = [](double, double) { return Control{0.6, 0.1}; };
  const PathEnsemble a = simulate_paths(mk, policy, spec);
  const PathEnsemble b = simulate_paths(mk, policy, spec);
  CHECK((a.wealth.array() == b.wealth.array()).all());
  CHECK(a.wealth.cols() == 5);
  const double expected = std::exp((0.1 + 0.6 * 0.08 - 0.1) * 1.0);
  const Eigen::VectorXd terminal = a.wealth.col(4);
  const double mean = terminal.mean();
  const double sd = std::sqrt((terminal.array() - mean).square().sum() / (terminal.size() - 1));
  CHECK(std::abs(mean - expected) < 4.0 * sd / std::sqrt(double(terminal.size())));

  spec.seed = 8;
  const PathEnsemble c = simulate_paths(mk, policy, spec);
  CHECK(c.wealth(0, 4) != a.wealth(0, 4));

  spec.dt = 0.3;
  CHECK_THROWS_AS(spec.steps(), DomainError);
}

TEST_CASE("path streams are independent of the path count") {
  const MarketParams mk;
  SimulationSpec spec;
  spec.horizon = 0.5;
  spec.dt = 0.125;
  spec.regime = Regime::Discrete;
  const ControlPolicy policy = [](double, double) { return Control{0.5, 0.02}; };
  spec.n_paths = 3;
  const PathEnsemble few = simulate_paths(mk, policy, spec);
  spec.n_paths = 50;
  const PathEnsemble many = simulate_paths(mk, policy, spec);
  CHECK((few.wealth.array() == many.wealth.topRows(3).array()).all());
}

TEST_CASE("utility") {
  const UtilityPower u{0.3, true};
  CHECK(u(1.0) == doctest::Approx(1.0 / 0.7));
  CHECK(u(0.0) == 0.0);
  const UtilityPower v{2.0, false};
  CHECK(v(2.0) == doctest::Approx(-0.5));
  CHECK(v.consumption_utility(3.0) == 0.0);
  CHECK(std::isinf(v(0.0)));
  CHECK_THROWS_AS((UtilityPower{1.0, true}.validate()), ConfigError);
}

}  // TEST_SUITE
