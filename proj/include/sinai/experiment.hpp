#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sinai/environment.hpp"
#include "sinai/observables.hpp"
#include "sinai/particles.hpp"
#include "sinai/valleys.hpp"

namespace sinai {

using ordered_json = nlohmann::ordered_json;

/// Scale of each acceptance criterion. Defaults are the full-size suite.
struct CheckScale {
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8};

  int oracle_envs = 1000;
  Site oracle_half_window = 500;
  double oracle_Gamma = 5.0;

  double engines_t = 200.0;
  double engines_lambda = 2.0;
  Site engines_half_window = 100;
  int engines_trials = 20000;
  double engines_site_fraction = 0.99;
  double engines_fano_low = 0.9;
  double engines_fano_high = 1.1;

  double localization_t = 1e6;
  int localization_envs = 50;
  double localization_mass = 0.9;
  double localization_bottom_fraction = 0.8;
  double localization_start_fraction = 0.7;

  std::vector<double> theorem_ts{1e4, 1e5, 1e6};
  int theorem_envs = 100;
  double theorem_rel_tol = 0.25;
  double theorem_fraction = 0.6;

  double migration_t = 1e5;
  int migration_envs = 50;
  double migration_cross_max = 0.02;
  double migration_influx_factor = 0.05;  // times (log t)^2

  double renewal_mean = 2.0;
  double renewal_mean_tol = 0.03;
  double laplace_tol = 0.02;
  double autocorr_tol = 0.03;

  double nf_mean_tol = 0.10;
};

struct ExperimentConfig {
  struct Env {
    EnvKind kind = EnvKind::two_point_symmetric;
    double rho0 = 0.25;
    std::uint64_t seed = 1;
    Site lo = -1000;
    Site hi = 1000;
  } env;
  struct Sim {
    double lambda = 1.0;
    double t = 1e5;
    int trials = 10;
    Engine engine = Engine::split;
    Site window_margin = 64;
    int workers = 1;
  } sim;
  struct Valleys {
    double gamma = 0.0;
    double K = 5.0;
    double chunk_factor = 4.0;
    double cap_factor = 512.0;
  } valleys;
  struct Observables {
    FunctionKind f_kind = FunctionKind::triangle_bump;
    double amplitude = 1.0;
    double cte = 1.0;
    std::vector<double> lambdas{0.0, 0.5, 1.0, 2.0};
    int starts_per_valley = 10;
  } observables;
  struct Renewal {
    EnvKind kind = EnvKind::uniform_symmetric;
    double rho0 = 0.35;
    double Gamma = 40.0;
    int envs = 5000;
    int extrema = 30;
    int bootstrap = 200;
    int nf_seeds = 5000;
    double nf_t = 1e12;
    double nf_K = 40.0;
  } renewal;
  CheckScale check;
  struct Output {
    std::string dir = "out";
    std::vector<std::string> formats{"json", "csv"};
    bool svg = false;
  } output;

  bool wants(std::string_view format) const;
};

/// Throws ConfigError on the first violated precondition.
void validate(const ExperimentConfig& cfg);

ordered_json to_json(const ExperimentConfig& cfg);
/// Starts from the defaults and applies the document. Unknown keys are
/// rejected so typos do not pass silently.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------- trials

/// Environment seed of trial k.
std::uint64_t trial_env_seed(std::uint64_t master_seed, std::uint64_t trial);

/// ceil(K (log t)^2 + log2(t) (log t)^2) + margin, widened to cover the
/// decomposition's outer walls and their indeterminate sets.
Site simulation_radius(const GammaParams& params, double K, Site margin);

struct TrialSetup {
  std::uint64_t trial = 0;
  std::uint64_t env_seed = 0;
  GammaParams params;
  CoverResult cover;
  Environment sim_env;  // contains [lo, hi]
  Site lo = 0;
  Site hi = 0;
};

/// Samples the environment of a trial, builds its cover and the simulation
/// window. Throws ScanIncomplete when the cover cannot be built.
TrialSetup prepare_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t);

struct Theorem1Trial {
  std::uint64_t trial = 0;
  bool ok = false;
  std::string error;
  int n_f = 0;
  double F_emp = 0.0;
  double F_pred = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  std::int64_t particles = 0;
  std::int64_t leaked = 0;
};

Theorem1Trial run_theorem1_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t);

struct LocalizeTrial {
  std::uint64_t trial = 0;
  bool ok = false;
  std::string error;
  int n_f = 0;
  LocalizationReport localization;
  MigrationReport migration;
  bool migration_done = false;
};

LocalizeTrial run_localize_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t,
                                 bool with_localization, bool with_migration);

/// Tagged fields at time t for migration: the initial Poisson field is split
/// by origin tag and each part evolved with the configured engine. The
/// poisson engine cannot track origin counts and falls back to split.
std::vector<ParticleField> evolve_tagged_fields(const ExperimentConfig& cfg, const TrialSetup& s, double t);

struct NfSample {
  std::vector<int> n_f;
  int skipped = 0;
  double sigma2 = 0.0;
};

/// n(f) over renewal.nf_seeds environments of the renewal law at
/// t = renewal.nf_t, K = renewal.nf_K.
NfSample sample_nf(const ExperimentConfig& cfg);

struct QuantileSummary {
  std::size_t count = 0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double mean = 0.0;
};

QuantileSummary quantiles(std::vector<double> xs);

// ---------------------------------------------------------------- commands

struct CommandResult {
  int exit_code = 0;
  std::string message;
  std::vector<std::filesystem::path> written;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_scan_incomplete = 2;
inline constexpr int exit_check_failed = 3;

CommandResult cmd_env(const ExperimentConfig& cfg);
CommandResult cmd_valleys(const ExperimentConfig& cfg);
/// cmd_valleys on an explicit potential (fixtures); the environment section
/// of the config is ignored.
CommandResult cmd_valleys(const ExperimentConfig& cfg, const Potential& P);
CommandResult cmd_simulate(const ExperimentConfig& cfg);
CommandResult cmd_localize(const ExperimentConfig& cfg);
CommandResult cmd_renewal(const ExperimentConfig& cfg);
CommandResult cmd_check(const ExperimentConfig& cfg);

}  // namespace sinai
