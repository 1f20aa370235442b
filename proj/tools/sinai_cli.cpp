// Command-line front end: env, valleys, simulate, localize, renewal, check.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sinai/acceptance.hpp"
#include "sinai/errors.hpp"
#include "sinai/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> t;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> engine;
  bool svg = false;
};

sinai::ExperimentConfig effective_config(const Overrides& o) {
  sinai::ExperimentConfig cfg = o.config.empty() ? sinai::ExperimentConfig{} : sinai::load_config(o.config);
  if (o.seed) cfg.env.seed = *o.seed;
  if (o.t) cfg.sim.t = *o.t;
  if (o.trials) cfg.sim.trials = *o.trials;
  if (o.out) cfg.output.dir = *o.out;
  if (o.workers) cfg.sim.workers = *o.workers;
  if (o.engine) cfg.sim.engine = sinai::engine_from_string(*o.engine);
  if (o.svg) cfg.output.svg = true;
  sinai::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sinai walks in a random environment from a Poisson field"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed (env.seed)");
  app.add_option("--t", o.t, "time horizon (sim.t)");
  app.add_option("--trials", o.trials, "number of environments (sim.trials)");
  app.add_option("--out", o.out, "output directory (output.dir)");
  app.add_option("--workers", o.workers, "worker threads, 0 = all cores (sim.workers)");
  app.add_option("--engine", o.engine, "split, per_particle or poisson (sim.engine)");
  app.add_flag("--svg", o.svg, "also write SVG plots");

  struct Sub {
    const char* name;
    const char* help;
    sinai::CommandResult (*run)(const sinai::ExperimentConfig&);
  };
  const Sub subs[] = {
      {"env", "write env.csv (index, alpha, S)", &sinai::cmd_env},
      {"valleys", "valley decomposition of one environment", [](const sinai::ExperimentConfig& c) { return sinai::cmd_valleys(c); }},
      {"simulate", "empirical vs predicted functional over trials", &sinai::cmd_simulate},
      {"localize", "localization and migration diagnostics", &sinai::cmd_localize},
      {"renewal", "renewal statistics of the Gamma-extrema", &sinai::cmd_renewal},
      {"check", "acceptance criteria at the configured scale", &sinai::cmd_check},
  };
  const Sub* chosen = nullptr;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->fallthrough();
    sc->callback([&chosen, &s] { chosen = &s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sinai::exit_config;
  }

  try {
    const sinai::ExperimentConfig cfg = effective_config(o);
    const sinai::CommandResult res = chosen->run(cfg);
    for (const auto& p : res.written) std::cout << "wrote " << p.string() << "\n";
    if (!res.message.empty()) (res.exit_code == 0 ? std::cout : std::cerr) << res.message << "\n";
    return res.exit_code;
  } catch (const sinai::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return sinai::exit_config;
  } catch (const sinai::ScanIncomplete& e) {
    std::cerr << "scan incomplete: " << e.what() << "\n";
    return sinai::exit_scan_incomplete;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sinai::exit_config;
  }
}
