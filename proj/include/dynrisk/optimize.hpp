#pragma once

#include <cmath>
#include <utility>

namespace dynrisk {

struct ScalarOptimum {
  double arg = 0.0;
  double value = 0.0;
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi],
/// stopping once the bracket is narrower than `tol`. The endpoints are
/// compared against the interior optimum, so boundary maxima are returned
/// exactly.
template <typename F>
ScalarOptimum golden_section_max(F&& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.618033988749894848204586834366;
  if (!(hi > lo)) {
    return {lo, f(lo)};
  }
  double a = lo;
  double b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  ScalarOptimum best = f1 >= f2 ? ScalarOptimum{x1, f1} : ScalarOptimum{x2, f2};
  const double f_lo = f(lo);
  if (f_lo >= best.value) best = {lo, f_lo};
  const double f_hi = f(hi);
  if (f_hi >= best.value) best = {hi, f_hi};
  return best;
}

template <typename F>
ScalarOptimum golden_section_min(F&& f, double lo, double hi, double tol) {
  auto neg = [&f](double x) { return -f(x); };
  ScalarOptimum r = golden_section_max(neg, lo, hi, tol);
  return {r.arg, -r.value};
}

/// Brent's minimisation (golden section accelerated by parabolic steps,
/// as in netlib fmin), turned into a maximisation. Same endpoint comparison
/// as golden_section_max. Converges in far fewer evaluations on smooth
/// objectives, which matters when one evaluation is a quadrature.
template <typename F>
ScalarOptimum brent_max(F&& f, double lo, double hi, double tol) {
  constexpr double kGolden = 0.381966011250105151795413165634;
  constexpr double kEps = 1.4901161193847656e-08;  // sqrt(double epsilon)
  if (!(hi > lo)) return {lo, f(lo)};
  auto g = [&f](double x) { return -f(x); };
  double a = lo, b = hi;
  double v = a + kGolden * (b - a);
  double w = v, x = v;
  double fx = g(x);
  double fv = fx, fw = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = kEps * std::abs(x) + tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm ? a : b) - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = g(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  ScalarOptimum best{x, -fx};
  const double f_lo = f(lo);
  if (f_lo >= best.value) best = {lo, f_lo};
  const double f_hi = f(hi);
  if (f_hi >= best.value) best = {hi, f_hi};
  return best;
}

/// Boundary of a predicate that holds at `inside` and fails at `outside`.
/// Returns the last point known to satisfy the predicate, within `tol` of the
/// switch point. Works for either ordering of the two arguments.
template <typename Pred>
double bisect_boundary(Pred&& holds, double inside, double outside, double tol) {
  while (std::abs(outside - inside) > tol) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    if (holds(mid)) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return inside;
}

/// Same contract as bisect_boundary for a continuous excess function
/// g (g(inside) <= 0 < g(outside)): returns a point with g <= 0 within `tol`
/// of the root. Illinois-modified regula falsi, with a bisection step
/// whenever three iterations fail to halve the bracket.
template <typename G>
double boundary_root(G&& g, double inside, double outside, double tol) {
  double g_in = g(inside);
  double g_out = g(outside);
  int side = 0;
  double reference = std::abs(outside - inside);
  for (int iter = 0; iter < 200 && std::abs(outside - inside) > tol; ++iter) {
    const double width = std::abs(outside - inside);
    double trial = inside + (outside - inside) * g_in / (g_in - g_out);
    if (!(std::abs(trial - inside) < width && std::abs(trial - outside) < width) ||
        trial == inside || trial == outside) {
      trial = 0.5 * (inside + outside);
    }
    const double g_trial = g(trial);
    if (g_trial <= 0.0) {
      inside = trial;
      g_in = g_trial;
      if (side == -1) g_out *= 0.5;
      side = -1;
    } else {
      outside = trial;
      g_out = g_trial;
      if (side == 1) g_in *= 0.5;
      side = 1;
    }
    if (iter % 3 != 2) continue;
    if (std::abs(outside - inside) > 0.5 * reference) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      const double g_mid = g(mid);
      if (g_mid <= 0.0) {
        inside = mid;
        g_in = g_mid;
      } else {
        outside = mid;
        g_out = g_mid;
      }
      side = 0;
    }
    reference = std::abs(outside - inside);
  }
  return inside;
}

}  // namespace dynrisk
