// powerctl: command-line front end for the power-control toolkit.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "powerctl/powerctl.hpp"

namespace fs = std::filesystem;
using namespace powerctl;

namespace {

/// Writes `body` to <out>/<name>, or to stdout when no directory is given.
void emit(const std::optional<fs::path>& out, const std::string& name, const std::string& body) {
  if (!out) {
    std::cout << body;
    return;
  }
  fs::create_directories(*out);
  std::ofstream file(*out / name, std::ios::binary);
  if (!file) throw ConfigError("cannot write " + (*out / name).string());
  file << body;
  std::cerr << "wrote " << (*out / name).string() << '\n';
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<Measure4> random_starts(const Config& cfg) {
  Rng rng(cfg.seed);
  std::vector<Measure4> starts;
  for (int i = 0; i < cfg.bias_starts; ++i) starts.push_back(random_measure(rng));
  return starts;
}

std::string cmd_equilibrium(const Config& cfg) { return dump(optimal_equilibrium(cfg.params)); }

std::string cmd_threshold(const Config& cfg) {
  BiasCheckOptions opt;
  opt.horizon = cfg.bias_horizon;
  opt.dt = cfg.dt;
  nlohmann::json j;
  j["policy"] = make_policy(cfg.params, cfg.pairing);
  j["bias_check"] = bias_optimality_check(cfg.params, random_starts(cfg), cfg.grid_step, opt);
  return dump(j);
}

std::string cmd_fluid(const Config& cfg) {
  IntegratorOptions opt;
  opt.dt = cfg.dt;
  std::ostringstream os;
  write_csv(os, integrate(cfg.m0, cfg.fluid_law(), cfg.horizon, cfg.params, opt));
  return os.str();
}

std::string cmd_vi(const Config& cfg) {
  const FiniteMdp mdp(cfg.params, cfg.users);
  const VIResult vi = relative_value_iteration(mdp, VIOptions{cfg.vi_tol});
  nlohmann::json states = nlohmann::json::array();
  for (std::size_t s = 0; s < mdp.space().size(); ++s)
    states.push_back({{"counts", mdp.space()[s].counts}, {"k", vi.policy[s]}, {"h", vi.h[s]}});
  return dump({{"users", cfg.users},
               {"g", vi.g},
               {"iterations", vi.iterations},
               {"span_residual", vi.span_residual},
               {"states", states}});
}

std::string cmd_compare(const Config& cfg) {
  std::ostringstream os;
  write_csv(os, compare_sweep(cfg.params, cfg.users, cfg.rho_sweep, cfg.vi_tol));
  return os.str();
}

std::string cmd_simulate(const Config& cfg) {
  SimulationOptions opt;
  opt.burn_in = cfg.burn_in;
  const SimulationResult res =
      simulate(finite_policy(make_policy(cfg.params, cfg.pairing)), cfg.params, cfg.users, cfg.sim_horizon,
               cfg.seed, opt);
  std::cerr << "mean_cost " << fmt12(res.mean_cost) << " ci95 " << fmt12(res.ci95) << '\n';
  std::ostringstream os;
  write_csv(os, res.trajectory);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field power control: equilibria, threshold policies, finite-N benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;

  struct Command {
    const char* name;
    const char* help;
    const char* file;
    std::string (*run)(const Config&);
  };
  const Command commands[] = {
      {"equilibrium", "optimal equilibrium and regime constants (JSON)", "equilibrium.json", cmd_equilibrium},
      {"threshold", "threshold policy and bias-optimality grid check (JSON)", "threshold.json", cmd_threshold},
      {"fluid", "closed-loop fluid trajectory (CSV)", "trajectory.csv", cmd_fluid},
      {"vi", "relative value iteration on the N-user chain (JSON)", "vi.json", cmd_vi},
      {"compare", "threshold policy vs optimum over the rho sweep (CSV)", "bench.csv", cmd_compare},
      {"simulate", "Monte Carlo run of the threshold policy (CSV)", "simulation.csv", cmd_simulate},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key = value parameter file")->required();
    sub->add_option("--out", out_dir, "output directory (stdout when omitted)");
    sub->add_option("--seed", seed, "overrides the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Config cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    for (const auto& c : commands) {
      if (!app.got_subcommand(c.name)) continue;
      const std::optional<fs::path> out = out_dir ? std::optional<fs::path>(*out_dir) : std::nullopt;
      emit(out, c.file, c.run(cfg));
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
