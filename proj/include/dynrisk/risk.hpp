#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "dynrisk/market.hpp"
#include "dynrisk/merton.hpp"

namespace dynrisk {

// ---------------------------------------------------------------------------
// Benchmarks: the wealth target Y_t whose shortfall defines the loss
// L = Y_t - X_{t+Delta}.

struct ConstantBenchmark {
  double y = 0.0;
};

/// Deterministic y(t): linear interpolation between knots, constant outside.
struct TableBenchmark {
  std::vector<std::pair<double, double>> knots;

  double at(double t) const;
};

struct FractionOfWealth {
  double p = 1.0;
};

/// Conditional expected wealth of a Merton investor over the risk horizon,
/// started from the current wealth.
struct MertonExpectation {};

using Benchmark =
    std::variant<ConstantBenchmark, TableBenchmark, FractionOfWealth, MertonExpectation>;

// ---------------------------------------------------------------------------

enum class MeasureKind { VaR, TCE, EL };

struct RiskMeasure {
  MeasureKind kind = MeasureKind::VaR;
  double alpha = 0.01;  // unused by EL

  static RiskMeasure var(double alpha) { return {MeasureKind::VaR, alpha}; }
  static RiskMeasure tce(double alpha) { return {MeasureKind::TCE, alpha}; }
  static RiskMeasure el() { return {MeasureKind::EL, 0.01}; }
};

/// Upper bound eps(t, x) on the risk: lambda * x (relative) or e (absolute).
/// A relative bound with infinite level disables the constraint.
struct RiskBound {
  enum class Kind { Relative, Absolute };
  Kind kind = Kind::Relative;
  double level = 0.05;

  static RiskBound relative(double lambda) { return {Kind::Relative, lambda}; }
  static RiskBound absolute(double e) { return {Kind::Absolute, e}; }
  static RiskBound none() {
    return {Kind::Relative, std::numeric_limits<double>::infinity()};
  }

  bool unbounded() const { return level == std::numeric_limits<double>::infinity(); }
  double evaluate(double x) const { return kind == Kind::Relative ? level * x : level; }
};

struct RiskConstraintConfig {
  RiskMeasure measure;
  Benchmark benchmark = MertonExpectation{};
  RiskBound bound;
  double delta = 1.0 / 24.0;
  // Continuous regime only: measure the risk with the number of shares (not
  // the proportion) frozen over the horizon, i.e. the discrete-time formulas
  // with phi = pi x and eta = c x delta.
  bool frozen_shares = false;

  void validate() const;
  // Benchmark and bound both scale linearly in wealth.
  bool homogeneous() const;
};

/// Everything needed to evaluate the constraint at a state.
struct RiskModel {
  MarketParams market;
  RiskConstraintConfig constraint;
  MertonReference merton;
};

/// Builds a model and attaches whichever Merton references the benchmark
/// needs for the given horizon (continuous always, discrete when the horizon
/// is a whole number of risk periods).
RiskModel make_risk_model(const MarketParams& market, const UtilityPower& utility,
                          const RiskConstraintConfig& constraint, double horizon,
                          const QuadratureSpec& quad = {});

double benchmark_value(const RiskModel& model, Regime regime, double t, double x);

/// Risk of holding proportion pi and consumption rate c over [t, t + Delta].
double risk_continuous(const RiskModel& model, double t, double x, double pi,
                       double c);

/// Risk of investing amount phi and consuming amount eta at t.
double risk_discrete(const RiskModel& model, double t, double x, double phi,
                     double eta);

/// Risk in the regime's native controls: (pi, c) continuous, (beta, zeta)
/// discrete with phi = beta (1 - zeta) x and eta = zeta x.
double risk_of_control(const RiskModel& model, Regime regime, double t, double x,
                       double exposure, double consumption);

bool is_feasible(const RiskModel& model, Regime regime, double t, double x,
                 double exposure, double consumption);

/// Risk at a fixed state (t, x) as a function of the regime's native
/// controls. The benchmark, the normal quantile and the bound are computed
/// once, which is what the solvers' inner loops need.
class RiskEvaluator {
 public:
  RiskEvaluator(const RiskModel& model, Regime regime, double t, double x);

  double operator()(double exposure, double consumption) const;
  bool feasible(double exposure, double consumption) const {
    return unbounded_ || (*this)(exposure, consumption) <= bound_;
  }
  double bound() const { return bound_; }
  bool unbounded() const { return unbounded_; }
  double benchmark() const { return y_; }

 private:
  const RiskModel* model_;
  Regime regime_;
  double x_;
  double y_;
  double z_;
  double bound_;
  bool unbounded_;
};

struct ExposureBox {
  double lo = -10.0;
  double hi = 10.0;

  static ExposureBox continuous_default() { return {-10.0, 10.0}; }
  static ExposureBox discrete_default() { return {0.0, 1.0}; }
};

struct ExposureInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;

  bool contains(double e) const { return !empty && e >= lo && e <= hi; }
  double clamp(double e) const { return e < lo ? lo : (e > hi ? hi : e); }
};

struct IntervalOptions {
  double tolerance = 1e-10;
  // Points of the uniform sample that re-checks the interval structure.
  int check_samples = 17;
  // Optional exposure believed feasible; skips the minimum-risk search when it is.
  double hint = std::numeric_limits<double>::quiet_NaN();
};

/// Feasible exposures at fixed consumption, intersected with `box`. The
/// endpoints are feasible and located by bisection to `tolerance`. Throws
/// NumericalError if the sampled feasibility pattern is not an interval.
ExposureInterval feasible_interval(const RiskModel& model, Regime regime, double t,
                                   double x, double consumption,
                                   const ExposureBox& box,
                                   const IntervalOptions& options = {});

struct OracleEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo estimate of the risk from draws of the one-period wealth law.
/// VaR is the empirical (1 - alpha) quantile of the loss with a 200-replicate
/// bootstrap standard error; TCE is the mean loss beyond that quantile; EL is
/// the mean positive loss.
OracleEstimate mc_risk_oracle(const RiskModel& model, Regime regime, double t,
                              double x, double exposure, double consumption,
                              std::size_t n_samples, std::uint64_t seed);

}  // namespace dynrisk
