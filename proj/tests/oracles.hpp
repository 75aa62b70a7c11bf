#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's numerics: normal integrals use Simpson's rule on an explicit
// density, quantiles use bisection on std::erfc.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Integral of f(z) pdf(z) over [a, b], composite Simpson with n panels.
inline double normal_integral(const std::function<double(double)>& f, double a, double b,
                              int n = 4000) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / n;
  double acc = f(a) * pdf(a) + f(b) * pdf(b);
  for (int i = 1; i < n; ++i) {
    const double z = a + i * h;
    acc += (i % 2 ? 4.0 : 2.0) * f(z) * pdf(z);
  }
  return acc * h / 3.0;
}

inline double normal_expectation(const std::function<double(double)>& f) {
  return normal_integral(f, -12.0, 12.0, 8000);
}

// One-period wealth W(z) = a + b exp(m + s z) with b, s >= 0 (increasing in
// z) and loss L = y - W.
struct ShiftedLognormal {
  double a = 0.0;
  double b = 0.0;
  double m = 0.0;
  double s = 0.0;

  double wealth(double z) const { return a + b * std::exp(m + s * z); }
};

inline double var(const ShiftedLognormal& w, double y, double alpha) {
  return y - w.wealth(quantile(alpha));
}

inline double tce(const ShiftedLognormal& w, double y, double alpha) {
  const double za = quantile(alpha);
  return normal_integral([&](double z) { return y - w.wealth(z); }, -14.0, za, 20000) / alpha;
}

inline double expected_loss(const ShiftedLognormal& w, double y) {
  if (w.b == 0.0 || w.s == 0.0) return std::max(y - w.wealth(0.0), 0.0);
  if (y <= w.a) return 0.0;
  // Loss is positive for z below z0.
  const double z0 = (std::log((y - w.a) / w.b) - w.m) / w.s;
  return normal_integral([&](double z) { return y - w.wealth(z); }, std::min(-14.0, z0 - 1.0), z0,
                         20000);
}

// Merton value coefficient h(0) from the reduced ODE
// h' = -gamma h^{(gamma-1)/gamma} - (1-gamma) K h, h(T) = 1, by RK4.
inline double merton_h0(double r, double mu, double sigma, double gamma, double horizon,
                        int steps = 20000) {
  const double k = r + (mu - r) * (mu - r) / (2.0 * gamma * sigma * sigma);
  auto rhs = [&](double h) {
    return -gamma * std::pow(h, (gamma - 1.0) / gamma) - (1.0 - gamma) * k * h;
  };
  double h = 1.0;
  const double dt = horizon / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = rhs(h);
    const double k2 = rhs(h - 0.5 * dt * k1);
    const double k3 = rhs(h - 0.5 * dt * k2);
    const double k4 = rhs(h - dt * k3);
    h -= dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }
  return h;
}

// E[(1 + beta R)^(1-gamma)], R the discounted net return over delta.
inline double power_return(double beta, double gamma, double delta, double r, double mu,
                           double sigma) {
  return normal_expectation([&](double z) {
    const double gross = std::exp((mu - 0.5 * sigma * sigma) * delta + sigma * std::sqrt(delta) * z);
    const double ret = std::exp(-r * delta) * gross - 1.0;
    return std::pow(1.0 + beta * ret, 1.0 - gamma);
  });
}

}  // namespace oracle
