#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynrisk/experiments.hpp"
#include "dynrisk/hjb.hpp"
#include "dynrisk/market.hpp"
#include "dynrisk/mdp.hpp"
#include "dynrisk/risk.hpp"

namespace dynrisk::cli {

struct KeySpec {
  std::string key;
  std::string fallback;
  std::string help;
};

/// Every configuration key with its default, in output order.
const std::vector<KeySpec>& known_keys();

/// Raw key -> value settings; starts from the defaults. Unknown keys raise
/// ConfigError naming the key.
class Settings {
 public:
  Settings();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Flat `key = value` lines, `#` starts a comment.
void load_config_file(Settings& settings, const std::string& path);
void load_config_text(Settings& settings, const std::string& text, const std::string& origin);

/// Numbers accept plain decimals and ratios such as "1/24".
double parse_number(const std::string& key, const std::string& text);
std::vector<double> parse_number_list(const std::string& key, const std::string& text);

/// merton | fraction:p | constant:y | table:t1:y1;t2:y2;...
Benchmark parse_benchmark(const std::string& text);

struct RunConfig {
  MarketParams market;
  UtilityPower utility;
  double horizon = 2.0;
  double delta = 1.0 / 24.0;
  RiskConstraintConfig risk;
  Regime regime = Regime::Continuous;
  std::string mode = "auto";

  double state_t = 0.0;
  double state_x = 1.0;
  Control control;

  hjb::GridSpec grid;
  hjb::ControlBox box;
  hjb::GeneralOptions general;
  mdp::WealthGrid wealth_grid;
  mdp::SolveOptions discrete;

  std::size_t n_paths = 100000;
  std::uint64_t seed = 20240601;
  double x0 = 1.0;
  std::size_t risk_paths = 1000;
  std::size_t export_paths = 20;

  experiments::ExperimentConfig experiment;

  std::string output_dir;
  unsigned threads = 1;
};

/// Typed, validated configuration. `env_output_dir` is the fallback output
/// directory when output.dir is empty.
RunConfig resolve(const Settings& settings, const std::string& env_output_dir);

}  // namespace dynrisk::cli
