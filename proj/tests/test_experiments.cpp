#include <doctest.h>

#include <cmath>

#include "dynrisk/experiments.hpp"
#include "dynrisk/merton.hpp"

using namespace dynrisk;
using namespace dynrisk::experiments;

namespace {

const MarketParams kMarket;

RiskConstraintConfig var_config(RiskBound bound) {
  return {RiskMeasure::var(0.01), MertonExpectation{}, bound, 1.0 / 24.0};
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("gap and efficiency arithmetic") {
  CHECK(relative_gap(2.0, 2.0) == 0.0);
  CHECK(relative_gap(1.0, 0.9) == doctest::Approx(0.1));
  CHECK_THROWS_AS(relative_gap(0.0, 1.0), DomainError);
  CHECK(efficiency(1.3, 1.3, 0.3) == 1.0);
  CHECK(efficiency(1.0, 2.0, 0.5) == doctest::Approx(0.25));
  CHECK_THROWS_AS(efficiency(-1.0, 2.0, 0.5), DomainError);
  // Bisection on a power value function reproduces the closed form.
  const double g = 0.3, a = 1.2, b = 1.7;
  auto vb = [&](double x) { return std::pow(x, 1 - g) / (1 - g) * b; };
  const double e = efficiency_bisect(a / (1 - g), vb, 0.1, 10.0);
  CHECK(e == doctest::Approx(efficiency(a, b, g)).epsilon(1e-7));
  CHECK_THROWS_AS(efficiency_bisect(100.0, vb, 0.1, 10.0), DomainError);
}

TEST_CASE("value gap and efficiency from the same solve are consistent") {
  ExperimentConfig cfg;
  cfg.t_steps = 120;
  cfg.surface_points = 5;
  const ExperimentResult r = run_experiment("fig1_var_continuous", cfg);
  // V = x^{1-g} h / (1-g) at x = 1: 1 - delta_V = h / h^M = e^{1-g}.
  CHECK(1.0 - r.headline("delta_v_0") == doctest::Approx(std::pow(r.headline("efficiency"), 0.7)).epsilon(1e-12));
  CHECK(r.headline("max_pi") < r.headline("pi_merton"));
  CHECK(r.table("surface").columns == std::vector<std::string>{"t", "x", "value", "pi", "c"});
  CHECK(r.table("surface").rows.size() == 120 * 5);
  CHECK_THROWS_AS(r.headline("nope"), ConfigError);
}

TEST_CASE("efficiency sweeps are monotone and bounded by one") {
  ExperimentConfig cfg;
  cfg.t_steps = 96;
  cfg.lambdas = {0.0, 0.02, 0.05, 0.1};
  for (const char* name : {"eff_vs_lambda_continuous", "eff_vs_lambda_discrete"}) {
    const ExperimentResult r = run_experiment(name, cfg);
    CHECK(r.headline("monotone_in_lambda") == 1.0);
    const Table& t = r.table("efficiency");
    REQUIRE(t.rows.size() == 4);
    for (const auto& row : t.rows) CHECK(std::get<double>(row[3]) <= 1.0);
  }
  CHECK_THROWS_AS(run_experiment("fig99", cfg), ConfigError);
  CHECK(recipe_names().size() == 7);
}

TEST_CASE("higher risk aversion shrinks the value gap") {
  auto gap_at = [](double gamma) {
    const UtilityPower u{gamma, true};
    const auto sol = hjb::solve_relative(kMarket, u, var_config(RiskBound::relative(0.05)), 2.0, 120);
    const MertonContinuous m = merton_continuous(kMarket, u, 2.0);
    return std::abs(relative_gap(m.value(0.0, 1.0), sol.value_at(0.0, 1.0)));
  };
  CHECK(gap_at(2.0) < gap_at(0.3));
}

TEST_CASE("Monte Carlo value check, continuous") {
  const UtilityPower u{0.3, true};
  for (RiskBound bound : {RiskBound::none(), RiskBound::relative(0.05)}) {
    const auto cfg = var_config(bound);
    const auto sol = hjb::solve_relative(kMarket, u, cfg, 2.0, 240);
    const RiskModel model = make_risk_model(kMarket, u, cfg, 2.0);
    const McValueReport rep = mc_value_check(sol, kMarket, u, model, 1.0, 100000, 42);
    CHECK(std::abs(rep.z) <= 3.0);
    CHECK(rep.reference == doctest::Approx(sol.value_at(0.0, 1.0)));
    if (!bound.unbounded()) CHECK(rep.max_risk_excess <= 1e-8);
  }
}

TEST_CASE("Monte Carlo value check, discrete") {
  const UtilityPower u{0.3, true};
  for (RiskBound bound : {RiskBound::none(), RiskBound::relative(0.05)}) {
    const auto cfg = var_config(bound);
    const auto sol = mdp::solve_relative(kMarket, u, cfg, 48, 1.0 / 24.0);
    const RiskModel model = make_risk_model(kMarket, u, cfg, 2.0);
    const McValueReport rep = mc_value_check(sol, kMarket, u, model, 1.0, 100000, 43);
    CHECK(std::abs(rep.z) <= 3.0);
    if (!bound.unbounded()) CHECK(rep.max_risk_excess <= 1e-8);
  }
}

TEST_CASE("cross-regime comparison stays close to one") {
  ExperimentConfig cfg;
  cfg.deltas = {0.25, 1.0, 2.5};
  const ExperimentResult r = run_experiment("eff_vs_delta", cfg);
  for (const auto& row : r.table("merton").rows) {
    const double e = std::get<double>(row[3]);
    CHECK(e <= 1.0);
    CHECK(e >= 0.995);
  }
  for (const auto& row : r.table("var").rows) CHECK(std::abs(std::get<double>(row[3]) - 1.0) <= 0.005);
}

}  // TEST_SUITE
