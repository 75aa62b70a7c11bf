#pragma once

#include <cmath>

namespace dynrisk {

inline double norm_pdf(double x) {
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Standard normal CDF through the complementary error function; accurate in
// both tails (no cancellation in 1 - erf).
inline double norm_cdf(double x) {
  constexpr double kInvSqrt2 = 0.707106781186547524400844362105;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

/// Standard normal quantile, Wichura's algorithm AS 241 (PPND16).
///
/// Three rational approximations of degree 7/7: a central one for
/// |p - 0.5| <= 0.425 in r = 0.180625 - q^2, and two tail ones in
/// r = sqrt(-log(min(p, 1-p))) split at r = 5. Relative accuracy is about
/// 1e-16, well inside the 1e-9 requirement of the risk formulas. Returns
/// -inf / +inf at p = 0 / 1 and NaN outside [0, 1].
double norm_quantile(double p);

}  // namespace dynrisk
