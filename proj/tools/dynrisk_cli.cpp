// dynrisk command-line front end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "dynrisk/errors.hpp"
#include "dynrisk/experiments.hpp"
#include "dynrisk/merton.hpp"
#include "output.hpp"

#ifndef DYNRISK_VERSION
#define DYNRISK_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace dynrisk;
using experiments::Table;

namespace {

struct CommandOutput {
  std::vector<std::pair<std::string, double>> headlines;
  std::vector<std::pair<std::string, Table>> files;  // file name, table
  std::vector<std::pair<std::string, double>> timing;
};

class Stopwatch {
 public:
  explicit Stopwatch(CommandOutput& out) : out_(out), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.timing.emplace_back(stage, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  CommandOutput& out_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
  }
  return xs;
}

int periods_of(const cli::RunConfig& c) {
  const double n = std::round(c.horizon / c.delta);
  if (n < 1.0 || std::abs(c.horizon / c.delta - n) > 1e-9 * n) {
    throw ConfigError("horizon.T must be a whole number of periods horizon.delta");
  }
  return static_cast<int>(n);
}

bool use_relative(const cli::RunConfig& c) {
  if (c.mode == "relative") return true;
  if (c.mode == "general") return false;
  return c.risk.homogeneous();
}

hjb::ContinuousSolution continuous_solution(const cli::RunConfig& c) {
  if (use_relative(c)) {
    return hjb::solve_relative(c.market, c.utility, c.risk, c.horizon, c.grid.t_steps, c.box);
  }
  return hjb::solve_general(c.market, c.utility, c.risk, c.horizon, c.grid, c.box, c.general);
}

mdp::DiscreteSolution discrete_solution(const cli::RunConfig& c) {
  const int n = periods_of(c);
  if (use_relative(c)) {
    return mdp::solve_relative(c.market, c.utility, c.risk, n, c.delta, c.discrete);
  }
  return mdp::solve_general(c.market, c.utility, c.risk, n, c.delta, c.wealth_grid, c.discrete);
}

Table continuous_surface(const hjb::ContinuousSolution& sol, const cli::RunConfig& c) {
  Table t{"surface", {"t", "x", "value", "pi", "c"}, {}};
  const std::vector<double> xs =
      sol.relative ? log_grid(c.grid.x_min, c.grid.x_max, c.grid.x_steps)
                   : std::vector<double>(sol.wealth.data(), sol.wealth.data() + sol.wealth.size());
  for (Eigen::Index k = 0; k < sol.policy_pi.rows(); ++k) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const Eigen::Index col = sol.relative ? 0 : Eigen::Index(j);
      const double v = sol.relative ? sol.value_at(sol.times[k], xs[j]) : sol.value(k, col);
      t.rows.push_back({sol.times[k], xs[j], v, sol.policy_pi(k, col), sol.policy_c(k, col)});
    }
  }
  return t;
}

Table discrete_surface(const mdp::DiscreteSolution& sol, const cli::RunConfig& c) {
  Table t{"surface", {"n", "t", "x", "value", "beta", "zeta"}, {}};
  const std::vector<double> xs =
      sol.relative
          ? log_grid(c.wealth_grid.x_min, c.wealth_grid.x_max, c.wealth_grid.nodes)
          : std::vector<double>(sol.wealth.data(), sol.wealth.data() + sol.wealth.size());
  for (int n = 0; n < sol.periods; ++n) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const Eigen::Index col = sol.relative ? 0 : Eigen::Index(j);
      t.rows.push_back({double(n), sol.times[n], xs[j], sol.value_at(n, xs[j]),
                        sol.policy_beta(n, col), sol.policy_zeta(n, col)});
    }
  }
  return t;
}

// Initial wealth the Merton investor needs to match the solution's value at
// unit wealth.
double continuous_efficiency(const hjb::ContinuousSolution& sol, const cli::RunConfig& c) {
  const MertonContinuous m = merton_continuous(c.market, c.utility, c.horizon);
  if (sol.relative) return experiments::efficiency(sol.h[0], m.value_coefficient(0.0), c.utility.gamma);
  return experiments::efficiency_bisect(
      sol.value_at(0.0, 1.0), [&](double x) { return m.value(0.0, x); }, c.grid.x_min,
      c.grid.x_max);
}

double discrete_efficiency(const mdp::DiscreteSolution& sol, const cli::RunConfig& c) {
  const MertonDiscrete m =
      merton_discrete(c.market, c.utility, sol.periods, c.delta, c.discrete.quadrature);
  if (sol.relative) return experiments::efficiency(sol.d[0], m.d[0], c.utility.gamma);
  const double g = c.utility.gamma;
  return experiments::efficiency_bisect(
      sol.value_at(0, 1.0),
      [&](double x) { return std::pow(x, 1.0 - g) / (1.0 - g) * m.d[0]; },
      c.wealth_grid.x_min, c.wealth_grid.x_max);
}

CommandOutput cmd_merton(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  const MertonContinuous m = merton_continuous(c.market, c.utility, c.horizon);
  out.headlines = {{"pi_m", m.pi_m},
                   {"tau", m.tau},
                   {"c_m_0", m.consumption_rate(0.0)},
                   {"h_m_0", m.value_coefficient(0.0)}};
  RiskConstraintConfig risk = c.risk;
  risk.bound = RiskBound::none();
  const RiskModel model = make_risk_model(c.market, c.utility, risk, c.horizon, c.discrete.quadrature);
  out.headlines.emplace_back("risk_continuous_0",
                             risk_continuous(model, 0.0, 1.0, m.pi_m, m.consumption_rate(0.0)));
  const double n = c.horizon / c.delta;
  if (std::abs(n - std::round(n)) <= 1e-9 * n && std::round(n) >= 1.0) {
    const MertonDiscrete d =
        merton_discrete(c.market, c.utility, periods_of(c), c.delta, c.discrete.quadrature);
    out.headlines.emplace_back("beta_m_0", d.beta[0]);
    out.headlines.emplace_back("zeta_m_0", d.zeta[0]);
    out.headlines.emplace_back("d_m_0", d.d[0]);
    out.headlines.emplace_back(
        "risk_discrete_0", risk_of_control(model, Regime::Discrete, 0.0, 1.0, d.beta[0], d.zeta[0]));
  }
  watch.lap("merton");
  return out;
}

CommandOutput cmd_risk(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  const RiskModel model = make_risk_model(c.market, c.utility, c.risk, c.horizon, c.discrete.quadrature);
  const double risk =
      risk_of_control(model, c.regime, c.state_t, c.state_x, c.control.exposure, c.control.consumption);
  const double bound = c.risk.bound.evaluate(c.state_x);
  out.headlines = {{"risk", risk},
                   {"benchmark", benchmark_value(model, c.regime, c.state_t, c.state_x)},
                   {"bound", bound},
                   {"feasible", risk <= bound ? 1.0 : 0.0}};
  watch.lap("risk");
  return out;
}

CommandOutput cmd_solve_continuous(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  const auto sol = continuous_solution(c);
  watch.lap("solve");
  const Control u = sol.policy_at(0.0, c.x0);
  out.headlines = {{"value_0", sol.value_at(0.0, c.x0)},
                   {"pi_0", u.exposure},
                   {"c_0", u.consumption},
                   {"iterations", double(sol.iterations)},
                   {"efficiency", continuous_efficiency(sol, c)}};
  if (sol.relative) out.headlines.emplace_back("h_0", sol.h[0]);
  out.files.emplace_back("surface.csv", continuous_surface(sol, c));
  watch.lap("export");
  return out;
}

CommandOutput cmd_solve_discrete(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  const auto sol = discrete_solution(c);
  watch.lap("solve");
  const Control u = sol.policy_at(0.0, c.x0);
  out.headlines = {{"value_0", sol.value_at(0, c.x0)},
                   {"beta_0", u.exposure},
                   {"zeta_0", u.consumption},
                   {"efficiency", discrete_efficiency(sol, c)}};
  if (sol.relative) out.headlines.emplace_back("d_0", sol.d[0]);
  out.files.emplace_back("surface.csv", discrete_surface(sol, c));
  watch.lap("export");
  return out;
}

CommandOutput cmd_efficiency(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  double a = 0.0, b = 0.0, e = 0.0;
  if (c.regime == Regime::Continuous) {
    const auto sol = continuous_solution(c);
    e = continuous_efficiency(sol, c);
    a = sol.value_at(0.0, 1.0);
    b = merton_continuous(c.market, c.utility, c.horizon).value(0.0, 1.0);
  } else {
    const auto sol = discrete_solution(c);
    e = discrete_efficiency(sol, c);
    a = sol.value_at(0, 1.0);
    b = std::pow(1.0, 1.0 - c.utility.gamma) / (1.0 - c.utility.gamma) *
        merton_discrete(c.market, c.utility, sol.periods, c.delta, c.discrete.quadrature).d[0];
  }
  watch.lap("solve");
  const double g = c.utility.gamma;
  // Value coefficients: V(0, 1) (1 - gamma).
  Table t{"efficiency", {"sweep_var", "value_coeff_a", "value_coeff_b", "efficiency"}, {}};
  t.rows.push_back({c.risk.bound.level, a * (1.0 - g), b * (1.0 - g), e});
  out.headlines = {{"efficiency", e}, {"loss", 1.0 - e}};
  out.files.emplace_back("efficiency.csv", t);
  return out;
}

CommandOutput cmd_simulate(const cli::RunConfig& c) {
  CommandOutput out;
  Stopwatch watch(out);
  const RiskModel model = make_risk_model(c.market, c.utility, c.risk, c.horizon, c.discrete.quadrature);
  experiments::McValueReport report;
  ControlPolicy policy;
  SimulationSpec spec;
  spec.x0 = c.x0;
  spec.horizon = c.horizon;
  spec.n_paths = c.export_paths;
  spec.seed = c.seed;
  spec.regime = c.regime;
  hjb::ContinuousSolution csol;
  mdp::DiscreteSolution dsol;
  if (c.regime == Regime::Continuous) {
    csol = continuous_solution(c);
    watch.lap("solve");
    report = experiments::mc_value_check(csol, c.market, c.utility, model, c.x0, c.n_paths, c.seed,
                                         c.risk_paths);
    policy = [&](double t, double x) { return csol.policy_at(t, x); };
    spec.dt = csol.dt();
  } else {
    dsol = discrete_solution(c);
    watch.lap("solve");
    report = experiments::mc_value_check(dsol, c.market, c.utility, model, c.x0, c.n_paths, c.seed,
                                         c.risk_paths);
    policy = [&](double t, double x) { return dsol.policy_at(t, x); };
    spec.dt = c.delta;
  }
  watch.lap("simulate");
  out.headlines = {{"estimate", report.estimate},
                   {"standard_error", report.standard_error},
                   {"reference", report.reference},
                   {"z", report.z},
                   {"max_risk_excess", report.max_risk_excess}};
  if (spec.n_paths > 0) {
    const PathEnsemble paths = simulate_paths(c.market, policy, spec);
    Table t{"paths", {"path", "t", "x", "exposure", "consumption"}, {}};
    const double nan = std::nan("");
    for (Eigen::Index p = 0; p < paths.wealth.rows(); ++p) {
      for (Eigen::Index k = 0; k < paths.wealth.cols(); ++k) {
        const bool last = k + 1 == paths.wealth.cols();
        t.rows.push_back({double(p), paths.times[k], paths.wealth(p, k),
                          last ? nan : paths.exposure(p, k), last ? nan : paths.consumption(p, k)});
      }
    }
    out.files.emplace_back("paths.csv", t);
  }
  watch.lap("export");
  return out;
}

CommandOutput cmd_experiment(const cli::RunConfig& c, const std::string& name) {
  CommandOutput out;
  Stopwatch watch(out);
  const auto result = experiments::run_experiment(name, c.experiment);
  watch.lap("experiment");
  out.headlines = result.headlines;
  for (const auto& t : result.tables) out.files.emplace_back(name + "_" + t.name + ".csv", t);
  return out;
}

nlohmann::ordered_json config_json(const cli::Settings& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& spec : cli::known_keys()) {
    if (spec.key == "output.dir") continue;  // keeps reruns into other directories identical
    const std::string& v = s.get(spec.key);
    if (v == "true" || v == "false") {
      j[spec.key] = v == "true";
      continue;
    }
    try {
      j[spec.key] = cli::parse_number(spec.key, v);
    } catch (const ConfigError&) {
      j[spec.key] = v;
    }
  }
  return j;
}

void emit(const std::string& command, const cli::Settings& settings, const cli::RunConfig& cfg,
          const CommandOutput& out) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  nlohmann::ordered_json summary;
  summary["version"] = DYNRISK_VERSION;
  summary["command"] = command;
  summary["config"] = config_json(settings);
  nlohmann::ordered_json heads = nlohmann::ordered_json::object();
  for (const auto& [k, v] : out.headlines) heads[k] = v;
  summary["headlines"] = heads;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& [file, table] : out.files) {
    cli::write_file(dir / file, cli::to_csv(table));
    files.push_back(file);
  }
  summary["files"] = files;
  cli::write_file(dir / "summary.json", summary.dump(2) + "\n");

  nlohmann::ordered_json timing;
  double total = 0.0;
  for (const auto& [stage, seconds] : out.timing) {
    timing["stages"][stage] = seconds;
    total += seconds;
  }
  timing["total_seconds"] = total;
  cli::write_file(dir / "timing.json", timing.dump(2) + "\n");

  for (const auto& [k, v] : out.headlines) {
    std::printf("%s = %s\n", k.c_str(), cli::format_double(v).c_str());
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Dynamic risk-constrained consumption and investment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DYNRISK_VERSION);

  std::string config_path;
  std::string benchmark_alias;
  std::string output_alias;
  std::string recipe;
  std::map<std::string, std::string> flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"merton", "Closed-form Merton solutions"},
      {"risk", "Risk of a control at a state"},
      {"solve-continuous", "Solve the continuous-time problem"},
      {"solve-discrete", "Solve the discrete-time problem"},
      {"simulate", "Monte Carlo check of a solved policy"},
      {"efficiency", "Efficiency against the Merton investor"},
      {"experiment", "Run a named experiment recipe"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--benchmark", benchmark_alias, "alias of --risk.benchmark");
    sub->add_option("--output-dir", output_alias, "alias of --output.dir");
    for (const auto& spec : cli::known_keys()) {
      sub->add_option("--" + spec.key, flags[spec.key], spec.help);
    }
    if (name == "experiment") {
      sub->add_option("name", recipe, "recipe name")->required();
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::fprintf(stderr, "dynrisk: unknown configuration key: %s\n", e.what());
    return 2;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "dynrisk: %s\n", e.what());
    return 2;
  }

  CLI::App* active = nullptr;
  for (CLI::App* sub : subs) {
    if (sub->parsed()) active = sub;
  }
  const std::string command = active->get_name();

  try {
    cli::Settings settings;
    if (!config_path.empty()) cli::load_config_file(settings, config_path);
    auto given = [&](const std::string& opt) { return active->count(opt) > 0; };
    if (given("--benchmark") && given("--risk.benchmark")) {
      throw ConfigError("conflicting flags --benchmark and --risk.benchmark");
    }
    if (given("--output-dir") && given("--output.dir")) {
      throw ConfigError("conflicting flags --output-dir and --output.dir");
    }
    for (const auto& spec : cli::known_keys()) {
      if (given("--" + spec.key)) settings.set(spec.key, flags[spec.key]);
    }
    if (given("--benchmark")) settings.set("risk.benchmark", benchmark_alias);
    if (given("--output-dir")) settings.set("output.dir", output_alias);

    const char* env = std::getenv("DYNRISK_OUTPUT_DIR");
    const cli::RunConfig cfg = cli::resolve(settings, env ? env : "");

    CommandOutput out;
    if (command == "merton") {
      out = cmd_merton(cfg);
    } else if (command == "risk") {
      out = cmd_risk(cfg);
    } else if (command == "solve-continuous") {
      out = cmd_solve_continuous(cfg);
    } else if (command == "solve-discrete") {
      out = cmd_solve_discrete(cfg);
    } else if (command == "simulate") {
      out = cmd_simulate(cfg);
    } else if (command == "efficiency") {
      out = cmd_efficiency(cfg);
    } else {
      out = cmd_experiment(cfg, recipe);
    }
    emit(command == "experiment" ? command + " " + recipe : command, settings, cfg, out);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "dynrisk: configuration error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "dynrisk: configuration error: %s\n", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "dynrisk: infeasible: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "dynrisk: numerical diagnostic: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dynrisk: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
