#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dynrisk/errors.hpp"

namespace dynrisk::cli {

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"market.r", "0.1", "risk-free rate"},
      {"market.mu", "0.18", "stock drift"},
      {"market.sigma", "0.35", "stock volatility"},
      {"utility.gamma", "0.3", "relative risk aversion"},
      {"utility.consumption", "true", "include utility of consumption"},
      {"horizon.T", "2", "terminal time"},
      {"horizon.delta", "1/24", "risk horizon and trading period"},
      {"risk.measure", "var", "var | tce | el"},
      {"risk.alpha", "0.01", "confidence level of VaR and TCE"},
      {"risk.benchmark", "merton", "merton | fraction:p | constant:y | table:t:y;t:y"},
      {"risk.bound", "relative", "relative | absolute | none"},
      {"risk.level", "0.05", "lambda (relative) or e (absolute)"},
      {"risk.frozen_shares", "false", "continuous risk with the share count frozen"},
      {"risk.regime", "continuous", "continuous | discrete"},
      {"state.t", "0", "time of the risk evaluation"},
      {"state.x", "1", "wealth of the risk evaluation"},
      {"control.pi", "0", "continuous stock proportion"},
      {"control.c", "0", "continuous consumption rate"},
      {"control.beta", "0", "discrete stock share after consumption"},
      {"control.zeta", "0", "discrete consumed fraction"},
      {"solver.mode", "auto", "auto | relative | general"},
      {"solver.t_steps", "240", "continuous time steps"},
      {"solver.x_min", "0.1", "continuous grid lower wealth"},
      {"solver.x_max", "10", "continuous grid upper wealth"},
      {"solver.x_steps", "201", "continuous grid wealth nodes"},
      {"solver.max_iterations", "50", "policy improvement iterations"},
      {"solver.policy_tolerance", "1e-6", "policy improvement stopping tolerance"},
      {"solver.pi_min", "-10", "lower bound of pi"},
      {"solver.pi_max", "10", "upper bound of pi"},
      {"solver.c_max", "10", "upper bound of c"},
      {"solver.beta_min", "0", "lower bound of beta"},
      {"solver.beta_max", "1", "upper bound of beta"},
      {"solver.quadrature_nodes", "64", "Gauss-Hermite nodes"},
      {"solver.wealth_min", "0.05", "discrete grid lower wealth"},
      {"solver.wealth_max", "20", "discrete grid upper wealth"},
      {"solver.wealth_nodes", "401", "discrete grid nodes"},
      {"simulation.n_paths", "100000", "Monte Carlo paths"},
      {"simulation.seed", "20240601", "random seed"},
      {"simulation.x0", "1", "initial wealth"},
      {"simulation.risk_paths", "1000", "paths with per-step risk re-checks"},
      {"simulation.export_paths", "20", "paths written to paths.csv"},
      {"experiment.surface_points", "41", "wealth points of relative surfaces"},
      {"experiment.lambdas", "0,0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.1,0.11,0.12,0.13,0.14,0.15",
       "relative bounds of the lambda sweeps"},
      {"experiment.deltas", "1/24,1/12,1/4,1/2,1,2,2.5", "risk horizons of eff_vs_delta"},
      {"experiment.delta_sweep_horizon", "10", "terminal time of eff_vs_delta"},
      {"experiment.delta_sweep_steps_per_year", "120", "continuous steps per year in eff_vs_delta"},
      {"output.dir", "", "output directory (default $DYNRISK_OUTPUT_DIR or dynrisk-out)"},
      {"output.format", "csv", "table format (csv)"},
      {"threads", "1", "worker threads"},
  };
  return keys;
}

Settings::Settings() {
  for (const auto& k : known_keys()) values_[k.key] = k.fallback;
}

void Settings::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second = value;
}

const std::string& Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double strict_double(const std::string& text, bool& ok) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    ok = false;
    return 0.0;
  }
  ok = used == t.size();
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

long long parse_integer(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return static_cast<long long>(v);
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

void load_config_text(Settings& settings, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    settings.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void load_config_file(Settings& settings, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  load_config_text(settings, buf.str(), path);
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  bool ok = false;
  const auto slash = t.find('/');
  double v = 0.0;
  if (slash == std::string::npos) {
    v = strict_double(t, ok);
  } else {
    bool ok_den = false;
    const double num = strict_double(t.substr(0, slash), ok);
    const double den = strict_double(t.substr(slash + 1), ok_den);
    ok = ok && ok_den && den != 0.0;
    v = ok ? num / den : 0.0;
  }
  if (!ok || std::isnan(v)) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<double> parse_number_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

Benchmark parse_benchmark(const std::string& text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  const std::string kind = lower(t.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : t.substr(colon + 1);
  if (kind == "merton" && rest.empty()) return MertonExpectation{};
  if (kind == "fraction") return FractionOfWealth{parse_number("risk.benchmark", rest)};
  if (kind == "constant") return ConstantBenchmark{parse_number("risk.benchmark", rest)};
  if (kind == "table") {
    TableBenchmark table;
    std::stringstream in(rest);
    std::string knot;
    while (std::getline(in, knot, ';')) {
      const auto c = knot.find(':');
      if (c == std::string::npos) throw ConfigError("risk.benchmark: table knots are t:y");
      table.knots.emplace_back(parse_number("risk.benchmark", knot.substr(0, c)),
                               parse_number("risk.benchmark", knot.substr(c + 1)));
    }
    return table;
  }
  throw ConfigError("risk.benchmark: unrecognised benchmark '" + text + "'");
}

RunConfig resolve(const Settings& s, const std::string& env_output_dir) {
  auto num = [&](const char* key) { return parse_number(key, s.get(key)); };
  auto integer = [&](const char* key) { return static_cast<int>(parse_integer(key, s.get(key))); };
  auto count = [&](const char* key) { return parse_count(key, s.get(key)); };
  auto flag = [&](const char* key) { return parse_bool(key, s.get(key)); };
  auto word = [&](const char* key) { return lower(trim(s.get(key))); };

  RunConfig c;
  c.market = {num("market.r"), num("market.mu"), num("market.sigma")};
  c.utility = {num("utility.gamma"), flag("utility.consumption")};
  c.horizon = num("horizon.T");
  c.delta = num("horizon.delta");
  if (!(c.horizon > 0.0)) throw ConfigError("horizon.T must be positive");
  if (!(c.delta > 0.0)) throw ConfigError("horizon.delta must be positive");

  const std::string measure = word("risk.measure");
  const double alpha = num("risk.alpha");
  if (measure == "var") {
    c.risk.measure = RiskMeasure::var(alpha);
  } else if (measure == "tce") {
    c.risk.measure = RiskMeasure::tce(alpha);
  } else if (measure == "el") {
    c.risk.measure = RiskMeasure::el();
    c.risk.measure.alpha = alpha;
  } else {
    throw ConfigError("risk.measure: expected var, tce or el, got '" + s.get("risk.measure") + "'");
  }
  c.risk.benchmark = parse_benchmark(s.get("risk.benchmark"));
  const std::string bound = word("risk.bound");
  const double level = num("risk.level");
  if (bound == "relative") {
    c.risk.bound = RiskBound::relative(level);
  } else if (bound == "absolute") {
    c.risk.bound = RiskBound::absolute(level);
  } else if (bound == "none") {
    c.risk.bound = RiskBound::none();
  } else {
    throw ConfigError("risk.bound: expected relative, absolute or none");
  }
  c.risk.delta = c.delta;
  c.risk.frozen_shares = flag("risk.frozen_shares");
  const std::string regime = word("risk.regime");
  if (regime == "continuous") {
    c.regime = Regime::Continuous;
  } else if (regime == "discrete") {
    c.regime = Regime::Discrete;
  } else {
    throw ConfigError("risk.regime: expected continuous or discrete");
  }
  c.mode = word("solver.mode");
  if (c.mode != "auto" && c.mode != "relative" && c.mode != "general") {
    throw ConfigError("solver.mode: expected auto, relative or general");
  }

  c.state_t = num("state.t");
  c.state_x = num("state.x");
  c.control = c.regime == Regime::Continuous
                  ? Control{num("control.pi"), num("control.c")}
                  : Control{num("control.beta"), num("control.zeta")};

  c.grid = {integer("solver.t_steps"), num("solver.x_min"), num("solver.x_max"),
            integer("solver.x_steps")};
  c.box = {num("solver.pi_min"), num("solver.pi_max"), num("solver.c_max")};
  c.general.max_iterations = integer("solver.max_iterations");
  c.general.policy_tolerance = num("solver.policy_tolerance");
  c.wealth_grid = {num("solver.wealth_min"), num("solver.wealth_max"),
                   integer("solver.wealth_nodes")};
  c.discrete.quadrature.node_count = integer("solver.quadrature_nodes");
  c.discrete.box = {num("solver.beta_min"), num("solver.beta_max")};

  c.n_paths = count("simulation.n_paths");
  c.seed = static_cast<std::uint64_t>(parse_integer("simulation.seed", s.get("simulation.seed")));
  c.x0 = num("simulation.x0");
  c.risk_paths = count("simulation.risk_paths");
  c.export_paths = count("simulation.export_paths");
  if (c.n_paths < 2) throw ConfigError("simulation.n_paths must be at least 2");
  if (!(c.x0 > 0.0)) throw ConfigError("simulation.x0 must be positive");

  const long long threads = parse_integer("threads", s.get("threads"));
  if (threads < 1) throw ConfigError("threads must be at least 1");
  c.threads = static_cast<unsigned>(threads);
  c.general.threads = c.threads;
  c.discrete.threads = c.threads;

  auto& e = c.experiment;
  e.market = c.market;
  e.gamma = c.utility.gamma;
  e.horizon = c.horizon;
  e.delta = c.delta;
  e.alpha = alpha;
  e.t_steps = c.grid.t_steps;
  e.grid = c.grid;
  e.wealth_grid = c.wealth_grid;
  e.quadrature = c.discrete.quadrature;
  e.surface_points = integer("experiment.surface_points");
  e.lambdas = parse_number_list("experiment.lambdas", s.get("experiment.lambdas"));
  e.deltas = parse_number_list("experiment.deltas", s.get("experiment.deltas"));
  e.delta_sweep_horizon = num("experiment.delta_sweep_horizon");
  e.delta_sweep_steps_per_year = integer("experiment.delta_sweep_steps_per_year");
  e.threads = c.threads;
  if (e.surface_points < 2) throw ConfigError("experiment.surface_points must be at least 2");

  if (word("output.format") != "csv") throw ConfigError("output.format: only csv is supported");
  c.output_dir = trim(s.get("output.dir"));
  if (c.output_dir.empty()) c.output_dir = env_output_dir.empty() ? "dynrisk-out" : env_output_dir;

  c.market.validate();
  c.utility.validate();
  c.risk.validate();
  c.grid.validate();
  c.box.validate();
  c.wealth_grid.validate();
  c.discrete.quadrature.validate();
  if (!(c.discrete.box.lo >= 0.0 && c.discrete.box.hi <= 1.0 && c.discrete.box.lo <= c.discrete.box.hi)) {
    throw ConfigError("solver.beta_min/beta_max must satisfy 0 <= min <= max <= 1");
  }
  return c;
}

}  // namespace dynrisk::cli
