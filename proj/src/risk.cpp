#include "dynrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>

#include "dynrisk/errors.hpp"
#include "dynrisk/normal.hpp"
#include "dynrisk/optimize.hpp"
#include "dynrisk/rng.hpp"

namespace dynrisk {

double TableBenchmark::at(double t) const {
  if (knots.empty()) throw ConfigError("table benchmark has no knots");
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  const auto it = std::upper_bound(
      knots.begin(), knots.end(), t,
      [](double value, const std::pair<double, double>& k) { return value < k.first; });
  const auto& [t1, y1] = *it;
  const auto& [t0, y0] = *(it - 1);
  return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
}

void RiskConstraintConfig::validate() const {
  if (measure.kind != MeasureKind::EL &&
      !(measure.alpha > 0.0 && measure.alpha < 1.0)) {
    throw ConfigError("risk.alpha must lie strictly inside (0, 1)");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("risk horizon delta must be positive");
  }
  if (!(bound.level >= 0.0)) throw ConfigError("risk bound level must be >= 0");
  if (bound.kind == RiskBound::Kind::Absolute && !std::isfinite(bound.level)) {
    throw ConfigError("absolute risk bound must be finite");
  }
  std::visit(
      [](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, ConstantBenchmark>) {
          if (!(b.y >= 0.0)) throw ConfigError("constant benchmark must be >= 0");
        } else if constexpr (std::is_same_v<B, FractionOfWealth>) {
          if (!(b.p > 0.0)) throw ConfigError("fraction benchmark must be > 0");
        } else if constexpr (std::is_same_v<B, TableBenchmark>) {
          if (b.knots.empty()) throw ConfigError("table benchmark has no knots");
          for (std::size_t i = 0; i < b.knots.size(); ++i) {
            if (!(b.knots[i].second >= 0.0)) {
              throw ConfigError("table benchmark values must be >= 0");
            }
            if (i > 0 && !(b.knots[i].first > b.knots[i - 1].first)) {
              throw ConfigError("table benchmark times must be strictly increasing");
            }
          }
        }
      },
      benchmark);
}

bool RiskConstraintConfig::homogeneous() const {
  const bool scaling_benchmark = std::holds_alternative<FractionOfWealth>(benchmark) ||
                                 std::holds_alternative<MertonExpectation>(benchmark);
  return scaling_benchmark && bound.kind == RiskBound::Kind::Relative;
}

RiskModel make_risk_model(const MarketParams& market, const UtilityPower& utility,
                          const RiskConstraintConfig& constraint, double horizon,
                          const QuadratureSpec& quad) {
  constraint.validate();
  RiskModel model{market, constraint, {}};
  if (std::holds_alternative<MertonExpectation>(constraint.benchmark)) {
    model.merton.continuous = merton_continuous(market, utility, horizon);
    const double periods = horizon / constraint.delta;
    const double n = std::round(periods);
    if (n >= 1.0 && std::abs(periods - n) <= 1e-9 * std::max(1.0, periods)) {
      model.merton.discrete =
          merton_discrete(market, utility, static_cast<int>(n), constraint.delta, quad);
    }
  }
  return model;
}

double benchmark_value(const RiskModel& model, Regime regime, double t, double x) {
  const auto& cfg = model.constraint;
  const auto& mk = model.market;
  const double dt = cfg.delta;
  return std::visit(
      [&](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, ConstantBenchmark>) {
          return b.y;
        } else if constexpr (std::is_same_v<B, TableBenchmark>) {
          return b.at(t);
        } else if constexpr (std::is_same_v<B, FractionOfWealth>) {
          return b.p * x;
        } else {
          if (regime == Regime::Continuous) {
            if (!model.merton.continuous) {
              throw ConfigError("Merton benchmark needs the continuous Merton reference");
            }
            const auto& m = *model.merton.continuous;
            const double c = m.consumption_rate(t);
            if (cfg.frozen_shares) {
              const double stock = m.pi_m * x;
              return std::exp(mk.r * dt) * (x - c * x * dt - stock) +
                     std::exp(mk.mu * dt) * stock;
            }
            return x * std::exp((mk.r + m.pi_m * mk.excess_return() - c) * dt);
          }
          if (!model.merton.discrete) {
            throw ConfigError(
                "Merton benchmark needs the discrete Merton reference (horizon must be "
                "a multiple of delta)");
          }
          const auto& m = *model.merton.discrete;
          const int n = m.period(t);
          const double eta = m.zeta[n] * x;
          const double phi = m.beta[n] * (x - eta);
          return std::exp(mk.r * dt) * (x - eta - phi) + std::exp(mk.mu * dt) * phi;
        }
      },
      cfg.benchmark);
}

namespace {

double alpha_quantile(const RiskMeasure& measure) {
  return measure.kind == MeasureKind::EL ? 0.0 : norm_quantile(measure.alpha);
}

// Loss y - X with X = e^{r dt}(x - eta - phi) + phi * Rtilde.
double shifted_lognormal_risk(const RiskMeasure& measure, const MarketParams& mk,
                              double dt, double z, double y, double x, double phi,
                              double eta) {
  const double f = y - std::exp(mk.r * dt) * (x - eta - phi);
  if (phi == 0.0) {
    return measure.kind == MeasureKind::EL ? std::max(f, 0.0) : f;
  }
  const double sd = mk.sigma * std::sqrt(dt);
  switch (measure.kind) {
    case MeasureKind::VaR:
      return f - std::exp(z * sd + (mk.mu - 0.5 * mk.sigma * mk.sigma) * dt) * phi;
    case MeasureKind::TCE:
      return f - std::exp(mk.mu * dt) * norm_cdf(z - sd) * phi / measure.alpha;
    case MeasureKind::EL: {
      if (f <= 0.0) return 0.0;
      const double d1 =
          (std::log(f / phi) - (mk.mu - 0.5 * mk.sigma * mk.sigma) * dt) / sd;
      const double el = f * norm_cdf(d1) - std::exp(mk.mu * dt) * norm_cdf(d1 - sd) * phi;
      return std::clamp(el, 0.0, f);
    }
  }
  return 0.0;
}

// Loss y - X with X lognormal: x exp((b - pi^2 sigma^2 / 2) dt + pi sigma W_dt).
double lognormal_risk(const RiskMeasure& measure, const MarketParams& mk, double dt,
                      double z, double y, double x, double pi, double c) {
  const double b = pi * mk.excess_return() + mk.r - c;
  const double s = std::abs(pi) * mk.sigma * std::sqrt(dt);
  if (s == 0.0) {
    const double loss = y - x * std::exp(b * dt);
    return measure.kind == MeasureKind::EL ? std::max(loss, 0.0) : loss;
  }
  const double log_drift = (b - 0.5 * pi * pi * mk.sigma * mk.sigma) * dt;
  switch (measure.kind) {
    case MeasureKind::VaR:
      return y - x * std::exp(log_drift + z * s);
    case MeasureKind::TCE:
      return y - x / measure.alpha * std::exp(b * dt) * norm_cdf(z - s);
    case MeasureKind::EL: {
      if (y <= 0.0) return 0.0;
      const double d1 = (std::log(y / x) - log_drift) / s;
      const double el = y * norm_cdf(d1) - x * std::exp(b * dt) * norm_cdf(d1 - s);
      return std::clamp(el, 0.0, y);
    }
  }
  return 0.0;
}

void check_discrete_amounts(double x, double phi, double eta) {
  const double slack = 1e-12 * x;
  if (eta < -slack || eta > x + slack) {
    throw DomainError("risk_discrete: consumption must lie in [0, x]");
  }
  if (phi < -slack || phi > x - eta + slack) {
    throw DomainError("risk_discrete: investment must lie in [0, x - eta]");
  }
}

double continuous_risk_at(const RiskModel& model, double z, double y, double x, double pi,
                          double c) {
  if (c < 0.0) throw DomainError("risk_continuous: consumption must be >= 0");
  const auto& cfg = model.constraint;
  if (cfg.frozen_shares) {
    if (pi < 0.0) throw DomainError("frozen-shares risk needs a long stock position");
    return shifted_lognormal_risk(cfg.measure, model.market, cfg.delta, z, y, x, pi * x,
                                  c * x * cfg.delta);
  }
  return lognormal_risk(cfg.measure, model.market, cfg.delta, z, y, x, pi, c);
}

double discrete_risk_at(const RiskModel& model, double z, double y, double x, double phi,
                        double eta) {
  check_discrete_amounts(x, phi, eta);
  return shifted_lognormal_risk(model.constraint.measure, model.market,
                                model.constraint.delta, z, y, x, std::max(phi, 0.0),
                                std::clamp(eta, 0.0, x));
}

}  // namespace

double risk_continuous(const RiskModel& model, double t, double x, double pi, double c) {
  if (!(x > 0.0)) throw DomainError("risk_continuous: wealth must be positive");
  return continuous_risk_at(model, alpha_quantile(model.constraint.measure),
                            benchmark_value(model, Regime::Continuous, t, x), x, pi, c);
}

double risk_discrete(const RiskModel& model, double t, double x, double phi, double eta) {
  if (!(x > 0.0)) throw DomainError("risk_discrete: wealth must be positive");
  return discrete_risk_at(model, alpha_quantile(model.constraint.measure),
                          benchmark_value(model, Regime::Discrete, t, x), x, phi, eta);
}

double risk_of_control(const RiskModel& model, Regime regime, double t, double x,
                       double exposure, double consumption) {
  return RiskEvaluator(model, regime, t, x)(exposure, consumption);
}

bool is_feasible(const RiskModel& model, Regime regime, double t, double x,
                 double exposure, double consumption) {
  return RiskEvaluator(model, regime, t, x).feasible(exposure, consumption);
}

RiskEvaluator::RiskEvaluator(const RiskModel& model, Regime regime, double t, double x)
    : model_(&model),
      regime_(regime),
      x_(x),
      y_(0.0),
      z_(alpha_quantile(model.constraint.measure)),
      bound_(model.constraint.bound.evaluate(x)),
      unbounded_(model.constraint.bound.unbounded()) {
  if (!(x > 0.0)) throw DomainError("risk: wealth must be positive");
  y_ = benchmark_value(model, regime, t, x);
}

double RiskEvaluator::operator()(double exposure, double consumption) const {
  if (regime_ == Regime::Continuous) {
    return continuous_risk_at(*model_, z_, y_, x_, exposure, consumption);
  }
  const double eta = consumption * x_;
  return discrete_risk_at(*model_, z_, y_, x_, exposure * (x_ - eta), eta);
}

ExposureInterval feasible_interval(const RiskModel& model, Regime regime, double t,
                                   double x, double consumption, const ExposureBox& box,
                                   const IntervalOptions& options) {
  if (model.constraint.bound.unbounded()) return {box.lo, box.hi, false};
  const RiskEvaluator evaluator(model, regime, t, x);
  const double eps = evaluator.bound();
  auto risk = [&](double e) { return evaluator(e, consumption); };
  auto ok = [&](double e) { return risk(e) <= eps; };

  double center = options.hint;
  if (!(std::isfinite(center) && center >= box.lo && center <= box.hi && ok(center))) {
    // The risk is quasi-convex in the exposure, so its minimiser is feasible
    // whenever anything is.
    const ScalarOptimum least = golden_section_min(risk, box.lo, box.hi, options.tolerance);
    if (!(least.value <= eps)) return {};
    center = least.arg;
  }

  ExposureInterval iv;
  iv.empty = false;
  iv.lo = ok(box.lo) ? box.lo : bisect_boundary(ok, center, box.lo, options.tolerance);
  iv.hi = ok(box.hi) ? box.hi : bisect_boundary(ok, center, box.hi, options.tolerance);

  for (int i = 0; i < options.check_samples; ++i) {
    const double e = box.lo + (box.hi - box.lo) * (i + 0.5) / options.check_samples;
    if (std::abs(e - iv.lo) <= 1e3 * options.tolerance ||
        std::abs(e - iv.hi) <= 1e3 * options.tolerance) {
      continue;
    }
    if (ok(e) != iv.contains(e)) {
      throw NumericalError("feasible exposures do not form an interval at t=" +
                           std::to_string(t) + ", x=" + std::to_string(x) +
                           ", exposure=" + std::to_string(e));
    }
  }
  return iv;
}

namespace {

constexpr std::size_t kOracleChunk = 1 << 16;

// k-th smallest (1-based) of a resample of the sorted sample, drawn with
// replacement. Multinomial cell counts are generated sequentially as
// conditional binomials, but only inside a window around k; the mass below
// the window is a single binomial draw.
double bootstrap_order_statistic(const std::vector<double>& sorted, std::size_t k,
                                 std::size_t window, std::mt19937_64& engine) {
  const std::size_t n = sorted.size();
  const std::size_t start = k > window ? k - window : 1;  // first cell in window
  std::size_t below = 0;
  if (start > 1) {
    std::binomial_distribution<std::size_t> b(
        n, static_cast<double>(start - 1) / static_cast<double>(n));
    below = b(engine);
  }
  if (below >= k) return std::numeric_limits<double>::quiet_NaN();
  std::size_t remaining = n - below;
  std::size_t cumulative = below;
  for (std::size_t cell = start; cell <= n; ++cell) {
    const std::size_t cells_left = n - cell + 1;
    std::size_t count = remaining;
    if (cells_left > 1) {
      std::binomial_distribution<std::size_t> b(remaining,
                                                1.0 / static_cast<double>(cells_left));
      count = b(engine);
    }
    cumulative += count;
    remaining -= count;
    if (cumulative >= k) return sorted[cell - 1];
  }
  return sorted.back();
}

}  // namespace

OracleEstimate mc_risk_oracle(const RiskModel& model, Regime regime, double t, double x,
                              double exposure, double consumption, std::size_t n_samples,
                              std::uint64_t seed) {
  if (n_samples < 10000) throw DomainError("mc_risk_oracle: need at least 1e4 samples");
  const auto& cfg = model.constraint;
  const auto& mk = model.market;
  const double dt = cfg.delta;
  const double y = benchmark_value(model, regime, t, x);

  // One-period wealth as a function of a standard normal draw.
  bool lognormal = regime == Regime::Continuous && !cfg.frozen_shares;
  LogNormalLaw law{};
  double riskless = 0.0;
  double phi = 0.0;
  if (lognormal) {
    law = conditional_wealth_law(x, exposure, consumption, dt, mk);
  } else {
    double eta = 0.0;
    if (regime == Regime::Continuous) {
      phi = exposure * x;
      eta = consumption * x * dt;
    } else {
      eta = consumption * x;
      phi = exposure * (x - eta);
    }
    riskless = std::exp(mk.r * dt) * (x - eta - phi);
    law = discrete_return_law(mk, dt);
  }
  const double vol = std::sqrt(law.s2);

  std::vector<double> loss(n_samples);
  for (std::size_t begin = 0, chunk = 0; begin < n_samples; begin += kOracleChunk, ++chunk) {
    PathStream stream(seed, chunk);
    const std::size_t end = std::min(n_samples, begin + kOracleChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const double g = std::exp(law.m + vol * stream.normal());
      loss[i] = y - (lognormal ? g : riskless + phi * g);
    }
  }
  const double n = static_cast<double>(n_samples);

  auto mean_sd = [&](auto&& f) {
    double sum = 0.0;
    for (double l : loss) sum += f(l);
    const double mean = sum / n;
    double ss = 0.0;
    for (double l : loss) ss += (f(l) - mean) * (f(l) - mean);
    return std::pair{mean, std::sqrt(ss / (n - 1.0))};
  };

  if (cfg.measure.kind == MeasureKind::EL) {
    const auto [mean, sd] = mean_sd([](double l) { return std::max(l, 0.0); });
    return {mean, sd / std::sqrt(n)};
  }

  const double alpha = cfg.measure.alpha;
  std::vector<double> sorted = loss;
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(std::ceil(n * (1.0 - alpha)));
  const double q = sorted[std::clamp<std::size_t>(k, 1, n_samples) - 1];

  if (cfg.measure.kind == MeasureKind::TCE) {
    // Tail mean in the form q + E[(L - q)^+] / alpha, which equals the mean of
    // the losses beyond q up to the O(1/n) rounding of the tail count.
    const auto [mean, sd] = mean_sd([q](double l) { return std::max(l - q, 0.0); });
    return {q + mean / alpha, sd / (alpha * std::sqrt(n))};
  }

  std::mt19937_64 engine(splitmix64(seed ^ 0xb00757a9b00757a9ULL));
  const auto window = static_cast<std::size_t>(8.0 * std::sqrt(n * alpha * (1.0 - alpha))) + 64;
  constexpr int kReplicates = 200;
  std::vector<double> reps;
  reps.reserve(kReplicates);
  while (static_cast<int>(reps.size()) < kReplicates) {
    const double v = bootstrap_order_statistic(sorted, k, window, engine);
    if (std::isfinite(v)) reps.push_back(v);
  }
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / kReplicates;
  double ss = 0.0;
  for (double v : reps) ss += (v - mean) * (v - mean);
  return {q, std::sqrt(ss / (kReplicates - 1))};
}

}  // namespace dynrisk
