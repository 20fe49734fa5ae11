#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "powerctl/finite.hpp"
#include "powerctl/threshold.hpp"

namespace powerctl {

/// Everything a CLI run needs, loaded from a flat `key = value` file.
///
/// Lists are comma separated; Markov rows are separated by ';'. Lines
/// starting with '#' are comments. Unknown keys are rejected.
struct Config {
  ModelParams params = default_scenario(0.1);
  int users = 10;
  std::vector<double> rho_sweep{0.05, 0.1, 0.2, 0.3};
  Pairing pairing = Pairing::EquilibriumMatched;
  Measure4 m0{0.25, 0.25, 0.25, 0.25};
  double horizon = 50.0;
  double dt = 0.01;
  /// "threshold" for the regime's threshold policy, otherwise a constant s4.
  std::string fluid_policy = "threshold";
  double grid_step = 0.005;
  int bias_starts = 5;
  double bias_horizon = 1000.0;
  long sim_horizon = 100000;
  double vi_tol = 1e-9;
  double burn_in = 0.1;
  std::uint64_t seed = 1;

  FeedbackLaw fluid_law() const {
    if (fluid_policy == "threshold") return make_policy(params, pairing).fluid_law();
    return FeedbackLaw::constant(std::stod(fluid_policy));
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, const std::string& key) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("key '" + key + "': cannot parse '" + std::string(text) + "' as a number");
  return value;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& key, char sep = ',') {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    out.push_back(parse_number<double>(text.substr(start, end - start), key));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace detail

inline Config parse_config(std::istream& in) {
  Config cfg;
  bool has_beta1 = false;
  bool has_beta = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string_view value = detail::trim(body.substr(eq + 1));
    ModelParams& p = cfg.params;

    if (key == "users") cfg.users = detail::parse_number<int>(value, key);
    else if (key == "theta") p.theta = detail::parse_number<double>(value, key);
    else if (key == "beta1") {
      const double b1 = detail::parse_number<double>(value, key);
      p.beta = {1.0 - b1, b1};
      has_beta1 = true;
    } else if (key == "beta") {
      p.beta = detail::parse_list(value, key);
      has_beta = true;
    } else if (key == "gains") p.gains = detail::parse_list(value, key);
    else if (key == "lambda") p.lambda = detail::parse_number<double>(value, key);
    else if (key == "n0") p.n0 = detail::parse_number<double>(value, key);
    else if (key == "p_max") p.p_max = detail::parse_number<double>(value, key);
    else if (key == "q_max") p.q_max = detail::parse_number<int>(value, key);
    else if (key == "rho") p.rho = detail::parse_number<double>(value, key);
    else if (key == "rho_sweep") cfg.rho_sweep = detail::parse_list(value, key);
    else if (key == "markov") {
      p.markov.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        const auto end = value.find(';', start);
        p.markov.push_back(detail::parse_list(value.substr(start, end - start), key));
        if (end == std::string_view::npos) break;
        start = end + 1;
      }
    } else if (key == "pairing") {
      if (value == "EquilibriumMatched") cfg.pairing = Pairing::EquilibriumMatched;
      else if (value == "Swapped") cfg.pairing = Pairing::Swapped;
      else throw ConfigError("pairing must be EquilibriumMatched or Swapped");
    } else if (key == "m0") {
      const auto v = detail::parse_list(value, key);
      if (v.size() != 4) throw ConfigError("m0 needs four entries");
      cfg.m0 = {v[0], v[1], v[2], v[3]};
    } else if (key == "horizon") cfg.horizon = detail::parse_number<double>(value, key);
    else if (key == "dt") cfg.dt = detail::parse_number<double>(value, key);
    else if (key == "fluid_policy") {
      cfg.fluid_policy = std::string(value);
      if (cfg.fluid_policy != "threshold") detail::parse_number<double>(value, key);
    } else if (key == "grid_step") cfg.grid_step = detail::parse_number<double>(value, key);
    else if (key == "bias_starts") cfg.bias_starts = detail::parse_number<int>(value, key);
    else if (key == "bias_horizon") cfg.bias_horizon = detail::parse_number<double>(value, key);
    else if (key == "sim_horizon") cfg.sim_horizon = detail::parse_number<long>(value, key);
    else if (key == "vi_tol") cfg.vi_tol = detail::parse_number<double>(value, key);
    else if (key == "burn_in") cfg.burn_in = detail::parse_number<double>(value, key);
    else if (key == "seed") cfg.seed = detail::parse_number<std::uint64_t>(value, key);
    else throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  if (has_beta1 && has_beta) throw ConfigError("give either beta1 or beta, not both");
  if (cfg.users < 1) throw ConfigError("users must be >= 1");
  if (cfg.rho_sweep.empty()) throw ConfigError("rho_sweep must not be empty");
  if (cfg.bias_starts < 1) throw ConfigError("bias_starts must be >= 1");
  cfg.params = validate_params(cfg.params);
  for (double r : cfg.rho_sweep) {
    ModelParams swept = cfg.params;
    swept.rho = r;
    validate_params(swept);
  }
  to_measure(cfg.m0);
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Uniformly random point of the 4-simplex.
inline Measure4 random_measure(Rng& rng) {
  Measure4 m;
  double total = 0.0;
  for (double& x : m) {
    x = -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (double& x : m) x /= total;
  return m;
}

}  // namespace powerctl
