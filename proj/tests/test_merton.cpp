#include <doctest.h>

#include <cmath>

#include "dynrisk/merton.hpp"
#include "oracles.hpp"

using namespace dynrisk;

TEST_SUITE("merton") {

TEST_CASE("continuous Merton closed form") {
  const MarketParams mk;
  const MertonContinuous m = merton_continuous(mk, UtilityPower{0.3, true}, 2.0);
  CHECK(m.pi_m == doctest::Approx(0.08 / (0.3 * 0.1225)).epsilon(1e-15));
  CHECK(std::abs(m.pi_m - 2.18) < 0.005);  // quoted as roughly 2.18
  CHECK(m.tau < 0.0);
  CHECK(m.consumption_rate(2.0) == doctest::Approx(1.0));
  // Value coefficient against an RK4 integration of the reduced ODE.
  CHECK(m.value_coefficient(0.0) ==
        doctest::Approx(oracle::merton_h0(0.1, 0.18, 0.35, 0.3, 2.0)).epsilon(1e-10));
  CHECK(m.value_coefficient(0.0) == doctest::Approx(1.675618).epsilon(1e-6));
  CHECK(m.consumption_rate(0.0) == doctest::Approx(0.178957).epsilon(1e-5));
  // Optimal consumption rate is h^{-1/gamma}.
  for (double t : {0.0, 0.7, 1.9}) {
    CHECK(m.consumption_rate(t) ==
          doctest::Approx(std::pow(m.value_coefficient(t), -1.0 / 0.3)).epsilon(1e-12));
  }
  CHECK(m.value(0.0, 2.0) == doctest::Approx(std::pow(2.0, 0.7) / 0.7 * m.value_coefficient(0.0)));
}

TEST_CASE("other risk aversions and the tau limit") {
  const MarketParams mk;
  for (double gamma : {0.5, 2.0, 4.0}) {
    const MertonContinuous m = merton_continuous(mk, UtilityPower{gamma, true}, 3.0);
    CHECK(m.value_coefficient(0.0) ==
          doctest::Approx(oracle::merton_h0(0.1, 0.18, 0.35, gamma, 3.0)).epsilon(1e-9));
  }
  // tau = 0 requires r + sharpe^2 / (2 gamma) = 0, i.e. r = 0 and mu = r.
  const MertonContinuous flat = merton_continuous(MarketParams{0.0, 0.0, 0.2}, UtilityPower{0.5, true}, 1.5);
  CHECK(flat.tau == 0.0);
  CHECK(flat.consumption_rate(0.0) == doctest::Approx(1.0 / 2.5));
  const MertonContinuous none = merton_continuous(mk, UtilityPower{0.9, false}, 10.0);
  CHECK(none.consumption_rate(0.0) == 0.0);
  CHECK(none.value_coefficient(0.0) ==
        doctest::Approx(std::exp(0.1 * (0.1 + 0.0064 / (2 * 0.9 * 0.1225)) * 10.0)));
  CHECK_THROWS_AS(merton_continuous(MarketParams{0.1, 0.18, 0.0}, UtilityPower{}, 1.0), DomainError);
}

// d-recursion with an independent expectation (Simpson) and a brute-force
// consumption search.
static double brute_d0(double gamma, int periods, double delta, double beta) {
  const double v = oracle::power_return(beta, gamma, delta, 0.1, 0.18, 0.35);
  const double growth = std::exp(0.1 * delta * (1 - gamma));
  double d = 1.0;
  for (int n = periods - 1; n >= 0; --n) {
    double best = -1e300;
    double lo = 0.0, hi = 1.0;
    for (int round = 0; round < 6; ++round) {
      double arg = lo;
      for (int i = 0; i <= 200; ++i) {
        const double z = lo + (hi - lo) * i / 200.0;
        const double val = std::pow(z, 1 - gamma) + std::pow(1 - z, 1 - gamma) * growth * v * d;
        if (val > best) {
          best = val;
          arg = z;
        }
      }
      const double w = (hi - lo) / 100.0;
      lo = std::max(0.0, arg - w);
      hi = std::min(1.0, arg + w);
    }
    d = best;
  }
  return d;
}

TEST_CASE("discrete Merton recursion") {
  const MarketParams mk;
  const MertonDiscrete m = merton_discrete(mk, UtilityPower{0.3, true}, 48, 1.0 / 24.0);
  CHECK(m.beta[0] == 1.0);
  CHECK(m.beta[47] == 1.0);
  CHECK(m.d[48] == 1.0);
  CHECK(m.d[0] == doctest::Approx(brute_d0(0.3, 48, 1.0 / 24.0, 1.0)).epsilon(1e-8));
  // beta = 1: the expectation is a lognormal moment.
  const double dt = 1.0 / 24.0;
  CHECK(m.v[0] == doctest::Approx(std::exp(0.7 * (0.08 - 0.06125) * dt + 0.5 * 0.49 * 0.1225 * dt)).epsilon(1e-14));
  CHECK(m.d[0] == doctest::Approx(3.625726859).epsilon(1e-9));
  CHECK(m.zeta[0] == doctest::Approx(0.0136568).epsilon(1e-5));
  for (int n = 0; n < 48; ++n) {
    CHECK(m.d[n] >= std::max(1.0, m.d[n + 1]));
    CHECK(m.zeta[n] <= m.zeta[std::min(n + 1, 47)] + 1e-15);
  }
  CHECK(m.period(0.99 / 24.0) == 0);
  CHECK(m.period(1.0 / 24.0) == 1);
  CHECK(m.period(5.0) == 47);
}

TEST_CASE("discrete Merton with interior share") {
  const MarketParams mk;
  const MertonDiscrete m = merton_discrete(mk, UtilityPower{0.9, true}, 4, 0.5);
  CHECK(m.beta[0] > 0.0);
  CHECK(m.beta[0] < 1.0);
  CHECK(m.beta[3] == m.beta[0]);
  double scan_arg = 0.0, scan_val = -1.0;
  for (int i = 0; i <= 4000; ++i) {
    const double b = i / 4000.0;
    const double v = oracle::power_return(b, 0.9, 0.5, 0.1, 0.18, 0.35);
    if (v > scan_val) {
      scan_val = v;
      scan_arg = b;
    }
  }
  CHECK(m.beta[0] == doctest::Approx(scan_arg).epsilon(5e-4));
  CHECK(m.d[0] == doctest::Approx(brute_d0(0.9, 4, 0.5, m.beta[0])).epsilon(1e-9));
}

TEST_CASE("discrete Merton without consumption") {
  const MertonDiscrete m = merton_discrete(MarketParams{}, UtilityPower{0.9, false}, 3, 1.0);
  CHECK(m.zeta.isZero());
  const double growth = std::exp(0.1 * 0.1);
  CHECK(m.d[0] == doctest::Approx(std::pow(growth * m.v[0], 3)).epsilon(1e-14));
  CHECK_THROWS_AS(merton_discrete(MarketParams{}, UtilityPower{}, 0, 1.0), DomainError);
}

}  // TEST_SUITE
