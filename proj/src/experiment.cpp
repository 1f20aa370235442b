#include "sinai/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "sinai/acceptance.hpp"
#include "sinai/errors.hpp"
#include "sinai/parallel.hpp"
#include "sinai/report_io.hpp"
#include "sinai/rng.hpp"

namespace sinai {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

bool ExperimentConfig::wants(std::string_view format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    convert(*it, out, path_ + "." + key);
  }

  const json* section(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + path_ + "." + k + "'");
    }
  }

 private:
  static void convert(const json& v, double& out, const std::string& where) {
    if (!v.is_number()) throw ConfigError("'" + where + "' must be a number");
    out = v.get<double>();
  }
  static void convert(const json& v, int& out, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError("'" + where + "' must be an integer");
    out = v.get<int>();
  }
  static void convert(const json& v, Site& out, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError("'" + where + "' must be an integer");
    out = v.get<Site>();
  }
  static void convert(const json& v, std::uint64_t& out, const std::string& where) {
    if (!v.is_number_unsigned()) throw ConfigError("'" + where + "' must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void convert(const json& v, bool& out, const std::string& where) {
    if (!v.is_boolean()) throw ConfigError("'" + where + "' must be true or false");
    out = v.get<bool>();
  }
  static void convert(const json& v, std::string& out, const std::string& where) {
    if (!v.is_string()) throw ConfigError("'" + where + "' must be a string");
    out = v.get<std::string>();
  }
  static void convert(const json& v, EnvKind& out, const std::string& where) {
    std::string s;
    convert(v, s, where);
    out = env_kind_from_string(s);
  }
  static void convert(const json& v, Engine& out, const std::string& where) {
    std::string s;
    convert(v, s, where);
    out = engine_from_string(s);
  }
  static void convert(const json& v, FunctionKind& out, const std::string& where) {
    std::string s;
    convert(v, s, where);
    out = function_kind_from_string(s);
  }
  template <class T>
  static void convert(const json& v, std::vector<T>& out, const std::string& where) {
    if (!v.is_array()) throw ConfigError("'" + where + "' must be an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x{};
      convert(v[i], x, where + "[" + std::to_string(i) + "]");
      out.push_back(x);
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig cfg;
  Reader root(doc, "config");
  if (const json* s = root.section("env")) {
    Reader r(*s, "env");
    r.get("kind", cfg.env.kind);
    r.get("rho0", cfg.env.rho0);
    r.get("seed", cfg.env.seed);
    r.get("lo", cfg.env.lo);
    r.get("hi", cfg.env.hi);
    r.finish();
  }
  if (const json* s = root.section("sim")) {
    Reader r(*s, "sim");
    r.get("lambda", cfg.sim.lambda);
    r.get("t", cfg.sim.t);
    r.get("trials", cfg.sim.trials);
    r.get("engine", cfg.sim.engine);
    r.get("window_margin", cfg.sim.window_margin);
    r.get("workers", cfg.sim.workers);
    r.finish();
  }
  if (const json* s = root.section("valleys")) {
    Reader r(*s, "valleys");
    r.get("gamma", cfg.valleys.gamma);
    r.get("K", cfg.valleys.K);
    r.get("chunk_factor", cfg.valleys.chunk_factor);
    r.get("cap_factor", cfg.valleys.cap_factor);
    r.finish();
  }
  if (const json* s = root.section("observables")) {
    Reader r(*s, "observables");
    r.get("f_kind", cfg.observables.f_kind);
    r.get("amplitude", cfg.observables.amplitude);
    r.get("cte", cfg.observables.cte);
    r.get("lambdas", cfg.observables.lambdas);
    r.get("starts_per_valley", cfg.observables.starts_per_valley);
    r.finish();
  }
  if (const json* s = root.section("renewal")) {
    Reader r(*s, "renewal");
    r.get("kind", cfg.renewal.kind);
    r.get("rho0", cfg.renewal.rho0);
    r.get("Gamma", cfg.renewal.Gamma);
    r.get("envs", cfg.renewal.envs);
    r.get("extrema", cfg.renewal.extrema);
    r.get("bootstrap", cfg.renewal.bootstrap);
    r.get("nf_seeds", cfg.renewal.nf_seeds);
    r.get("nf_t", cfg.renewal.nf_t);
    r.get("nf_K", cfg.renewal.nf_K);
    r.finish();
  }
  if (const json* s = root.section("check")) {
    Reader r(*s, "check");
    auto& c = cfg.check;
    r.get("criteria", c.criteria);
    r.get("oracle_envs", c.oracle_envs);
    r.get("oracle_half_window", c.oracle_half_window);
    r.get("oracle_Gamma", c.oracle_Gamma);
    r.get("engines_t", c.engines_t);
    r.get("engines_lambda", c.engines_lambda);
    r.get("engines_half_window", c.engines_half_window);
    r.get("engines_trials", c.engines_trials);
    r.get("engines_site_fraction", c.engines_site_fraction);
    r.get("engines_fano_low", c.engines_fano_low);
    r.get("engines_fano_high", c.engines_fano_high);
    r.get("localization_t", c.localization_t);
    r.get("localization_envs", c.localization_envs);
    r.get("localization_mass", c.localization_mass);
    r.get("localization_bottom_fraction", c.localization_bottom_fraction);
    r.get("localization_start_fraction", c.localization_start_fraction);
    r.get("theorem_ts", c.theorem_ts);
    r.get("theorem_envs", c.theorem_envs);
    r.get("theorem_rel_tol", c.theorem_rel_tol);
    r.get("theorem_fraction", c.theorem_fraction);
    r.get("migration_t", c.migration_t);
    r.get("migration_envs", c.migration_envs);
    r.get("migration_cross_max", c.migration_cross_max);
    r.get("migration_influx_factor", c.migration_influx_factor);
    r.get("renewal_mean", c.renewal_mean);
    r.get("renewal_mean_tol", c.renewal_mean_tol);
    r.get("laplace_tol", c.laplace_tol);
    r.get("autocorr_tol", c.autocorr_tol);
    r.get("nf_mean_tol", c.nf_mean_tol);
    r.finish();
  }
  if (const json* s = root.section("output")) {
    Reader r(*s, "output");
    r.get("dir", cfg.output.dir);
    r.get("formats", cfg.output.formats);
    r.get("svg", cfg.output.svg);
    r.finish();
  }
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["env"] = {{"kind", to_string(cfg.env.kind)},
              {"rho0", cfg.env.rho0},
              {"seed", cfg.env.seed},
              {"lo", cfg.env.lo},
              {"hi", cfg.env.hi}};
  j["sim"] = {{"lambda", cfg.sim.lambda},
              {"t", cfg.sim.t},
              {"trials", cfg.sim.trials},
              {"engine", to_string(cfg.sim.engine)},
              {"window_margin", cfg.sim.window_margin},
              {"workers", cfg.sim.workers}};
  j["valleys"] = {{"gamma", cfg.valleys.gamma},
                  {"K", cfg.valleys.K},
                  {"chunk_factor", cfg.valleys.chunk_factor},
                  {"cap_factor", cfg.valleys.cap_factor}};
  j["observables"] = {{"f_kind", to_string(cfg.observables.f_kind)},
                      {"amplitude", cfg.observables.amplitude},
                      {"cte", cfg.observables.cte},
                      {"lambdas", cfg.observables.lambdas},
                      {"starts_per_valley", cfg.observables.starts_per_valley}};
  j["renewal"] = {{"kind", to_string(cfg.renewal.kind)},
                  {"rho0", cfg.renewal.rho0},
                  {"Gamma", cfg.renewal.Gamma},
                  {"envs", cfg.renewal.envs},
                  {"extrema", cfg.renewal.extrema},
                  {"bootstrap", cfg.renewal.bootstrap},
                  {"nf_seeds", cfg.renewal.nf_seeds},
                  {"nf_t", cfg.renewal.nf_t},
                  {"nf_K", cfg.renewal.nf_K}};
  const auto& c = cfg.check;
  j["check"] = {{"criteria", c.criteria},
                {"oracle_envs", c.oracle_envs},
                {"oracle_half_window", c.oracle_half_window},
                {"oracle_Gamma", c.oracle_Gamma},
                {"engines_t", c.engines_t},
                {"engines_lambda", c.engines_lambda},
                {"engines_half_window", c.engines_half_window},
                {"engines_trials", c.engines_trials},
                {"engines_site_fraction", c.engines_site_fraction},
                {"engines_fano_low", c.engines_fano_low},
                {"engines_fano_high", c.engines_fano_high},
                {"localization_t", c.localization_t},
                {"localization_envs", c.localization_envs},
                {"localization_mass", c.localization_mass},
                {"localization_bottom_fraction", c.localization_bottom_fraction},
                {"localization_start_fraction", c.localization_start_fraction},
                {"theorem_ts", c.theorem_ts},
                {"theorem_envs", c.theorem_envs},
                {"theorem_rel_tol", c.theorem_rel_tol},
                {"theorem_fraction", c.theorem_fraction},
                {"migration_t", c.migration_t},
                {"migration_envs", c.migration_envs},
                {"migration_cross_max", c.migration_cross_max},
                {"migration_influx_factor", c.migration_influx_factor},
                {"renewal_mean", c.renewal_mean},
                {"renewal_mean_tol", c.renewal_mean_tol},
                {"laplace_tol", c.laplace_tol},
                {"autocorr_tol", c.autocorr_tol},
                {"nf_mean_tol", c.nf_mean_tol}};
  j["output"] = {{"dir", cfg.output.dir}, {"formats", cfg.output.formats}, {"svg", cfg.output.svg}};
  return j;
}

void validate(const ExperimentConfig& cfg) {
  EnvDistribution::make(cfg.env.kind, cfg.env.rho0);
  require(cfg.env.hi > cfg.env.lo, "env window must have positive width (env.hi > env.lo)");
  require(cfg.env.lo <= 0 && cfg.env.hi >= 0, "env window must contain the origin");

  require(finite_positive(cfg.sim.lambda), "sim.lambda must be > 0");
  GammaParams::make(cfg.sim.t, cfg.valleys.gamma);
  require(cfg.sim.trials >= 1, "sim.trials must be >= 1");
  require(cfg.sim.window_margin >= 0, "sim.window_margin must be >= 0");
  require(cfg.sim.workers >= 0, "sim.workers must be >= 0 (0 = all cores)");

  require(finite_positive(cfg.valleys.K), "valleys.K must be > 0");
  require(std::isfinite(cfg.valleys.gamma) && cfg.valleys.gamma >= 0.0, "valleys.gamma must be >= 0");
  require(finite_positive(cfg.valleys.chunk_factor), "valleys.chunk_factor must be > 0");
  require(cfg.valleys.cap_factor >= cfg.valleys.chunk_factor, "valleys.cap_factor must be >= chunk_factor");

  require(std::isfinite(cfg.observables.amplitude), "observables.amplitude must be finite");
  require(finite_positive(cfg.observables.cte), "observables.cte must be > 0");
  for (double l : cfg.observables.lambdas) {
    require(std::isfinite(l) && l >= 0.0, "observables.lambdas must be >= 0");
  }
  require(cfg.observables.starts_per_valley >= 0, "observables.starts_per_valley must be >= 0");

  EnvDistribution::make(cfg.renewal.kind, cfg.renewal.rho0);
  require(finite_positive(cfg.renewal.Gamma), "renewal.Gamma must be > 0");
  require(cfg.renewal.envs >= 1, "renewal.envs must be >= 1");
  require(cfg.renewal.extrema >= 3, "renewal.extrema must be >= 3");
  require(cfg.renewal.bootstrap >= 0, "renewal.bootstrap must be >= 0");
  require(cfg.renewal.nf_seeds >= 1, "renewal.nf_seeds must be >= 1");
  GammaParams::make(cfg.renewal.nf_t, cfg.valleys.gamma);
  require(finite_positive(cfg.renewal.nf_K), "renewal.nf_K must be > 0");

  const auto& c = cfg.check;
  for (int id : c.criteria) require(id >= 1 && id <= 8, "check.criteria entries must lie in 1..8");
  require(c.oracle_envs >= 1 && c.oracle_half_window >= 1 && finite_positive(c.oracle_Gamma),
          "check.oracle_* must be positive");
  require(finite_positive(c.engines_lambda) && c.engines_trials >= 2 && c.engines_half_window >= 1,
          "check.engines_* must be positive (trials >= 2)");
  require(c.localization_envs >= 1 && c.theorem_envs >= 1 && c.migration_envs >= 1,
          "check environment counts must be >= 1");
  require(!c.theorem_ts.empty(), "check.theorem_ts must not be empty");
  for (double t : c.theorem_ts) GammaParams::make(t, cfg.valleys.gamma);
  GammaParams::make(c.localization_t, cfg.valleys.gamma);
  GammaParams::make(c.migration_t, cfg.valleys.gamma);

  require(!cfg.output.dir.empty(), "output.dir must not be empty");
  for (const auto& f : cfg.output.formats) {
    require(f == "json" || f == "csv", "output.formats entries must be 'json' or 'csv'");
  }
}

// ---------------------------------------------------------------- trials

std::uint64_t trial_env_seed(std::uint64_t master_seed, std::uint64_t trial) {
  return derive_key(master_seed, Stream::trial_seed, trial);
}

namespace {

// Seed for particle randomness, disjoint from the environment seeds.
std::uint64_t particle_seed(const ExperimentConfig& cfg) {
  return derive_key(cfg.env.seed, Stream::dynamics, 0);
}

FunctionSpec test_function(const ExperimentConfig& cfg) {
  return FunctionSpec::make(cfg.observables.f_kind, cfg.valleys.K, cfg.observables.amplitude);
}

}  // namespace

Site simulation_radius(const GammaParams& params, double K, Site margin) {
  const double L2 = params.scale();
  return static_cast<Site>(std::ceil(K * L2 + params.log2_t() * L2)) + margin;
}

TrialSetup prepare_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t) {
  TrialSetup s;
  s.trial = trial;
  s.env_seed = trial_env_seed(cfg.env.seed, trial);
  s.params = GammaParams::make(t, cfg.valleys.gamma);
  const auto dist = EnvDistribution::make(cfg.env.kind, cfg.env.rho0);
  const Environment seed_env = sample_environment(dist, -1, 1, s.env_seed);
  s.cover = construct_cover(seed_env, s.params, cfg.valleys.K,
                            AdaptiveWindow{cfg.valleys.chunk_factor, cfg.valleys.cap_factor});
  const auto& d = s.cover.decomposition;
  const Site R = simulation_radius(s.params, cfg.valleys.K, cfg.sim.window_margin);
  s.lo = -R;
  s.hi = R;
  if (d.n_f > 0) {
    const Site pad = s.params.indeterminate_radius() + cfg.sim.window_margin;
    s.lo = std::min(s.lo, d.M.front() - pad);
    s.hi = std::max(s.hi, d.M.back() + pad);
  }
  const Environment& base = s.cover.environment;
  s.sim_env = extend_environment(base, std::min(s.lo, base.lo()), std::max(s.hi, base.hi()));
  return s;
}

Theorem1Trial run_theorem1_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t) {
  Theorem1Trial r;
  r.trial = trial;
  try {
    const TrialSetup s = prepare_trial(cfg, trial, t);
    const auto& d = s.cover.decomposition;
    const FunctionSpec f = test_function(cfg);
    const ParticleField field = simulate_field(cfg.sim.engine, s.sim_env, cfg.sim.lambda, t, s.lo, s.hi,
                                               particle_seed(cfg), trial);
    r.n_f = d.n_f;
    r.F_emp = empirical_functional(field, f, t);
    r.F_pred = predicted_functional(d, f, cfg.sim.lambda, t);
    r.abs_err = std::abs(r.F_emp - r.F_pred);
    r.rel_err = r.F_pred > 0.0 ? r.abs_err / r.F_pred : 0.0;
    r.particles = field.total();
    r.leaked = field.leaked_left + field.leaked_right;
    r.ok = true;
  } catch (const ScanIncomplete& e) {
    r.error = std::string("scan incomplete: ") + e.what();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<ParticleField> evolve_tagged_fields(const ExperimentConfig& cfg, const TrialSetup& s, double t) {
  const std::uint64_t pseed = particle_seed(cfg);
  const ParticleField initial =
      init_field(cfg.sim.lambda, s.lo, s.hi, derive_key(pseed, Stream::trial_seed, s.trial));
  auto parts = split_by_origin(initial, s.cover.decomposition);
  const std::uint64_t trial_key = derive_key(pseed, Stream::dynamics, s.trial);
  for (auto& part : parts) {
    const int label = *part.origin_label;
    CounterRng rng(trial_key, Stream::dynamics, static_cast<std::uint64_t>(label + 1));
    if (cfg.sim.engine == Engine::per_particle) {
      auto cloud = evolve_per_particle(to_positions(part), s.sim_env, t, rng, s.lo, s.hi);
      part = to_field(cloud);
      part.origin_label = label;
    } else {
      part = evolve_field(std::move(part), s.sim_env, t, rng);
    }
  }
  return parts;
}

LocalizeTrial run_localize_trial(const ExperimentConfig& cfg, std::uint64_t trial, double t,
                                 bool with_localization, bool with_migration) {
  LocalizeTrial r;
  r.trial = trial;
  try {
    const TrialSetup s = prepare_trial(cfg, trial, t);
    const auto& d = s.cover.decomposition;
    r.n_f = d.n_f;
    if (with_localization) {
      r.localization = localize(s.sim_env, d, t, cfg.observables.cte, cfg.observables.starts_per_valley,
                                derive_key(cfg.env.seed, Stream::start_sites, trial), s.lo, s.hi);
    }
    if (with_migration) {
      r.migration = migration_report(evolve_tagged_fields(cfg, s, t), d);
      r.migration_done = true;
    }
    r.ok = true;
  } catch (const ScanIncomplete& e) {
    r.error = std::string("scan incomplete: ") + e.what();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

NfSample sample_nf(const ExperimentConfig& cfg) {
  NfSample out;
  const auto dist = EnvDistribution::make(cfg.renewal.kind, cfg.renewal.rho0);
  out.sigma2 = sigma2_analytic(dist);
  const GammaParams params = GammaParams::make(cfg.renewal.nf_t, cfg.valleys.gamma);
  const auto n = static_cast<std::size_t>(cfg.renewal.nf_seeds);
  std::vector<int> values(n, -1);
  parallel_for(n, resolve_workers(cfg.sim.workers), [&](std::size_t k) {
    const auto seed = derive_key(cfg.env.seed, Stream::environment, k);
    try {
      const Environment env = sample_environment(dist, -1, 1, seed);
      values[k] = construct_cover(env, params, cfg.renewal.nf_K,
                                  AdaptiveWindow{cfg.valleys.chunk_factor, cfg.valleys.cap_factor})
                      .decomposition.n_f;
    } catch (const ScanIncomplete&) {
      values[k] = -1;
    }
  });
  for (int v : values) {
    if (v < 0) {
      ++out.skipped;
    } else {
      out.n_f.push_back(v);
    }
  }
  return out;
}

QuantileSummary quantiles(std::vector<double> xs) {
  QuantileSummary q;
  q.count = xs.size();
  if (xs.empty()) return q;
  std::sort(xs.begin(), xs.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, xs.size() - 1);
    return xs[i] + (pos - static_cast<double>(i)) * (xs[j] - xs[i]);
  };
  q.median = at(0.5);
  q.q10 = at(0.1);
  q.q90 = at(0.9);
  double sum = 0.0;
  for (double x : xs) sum += x;
  q.mean = sum / static_cast<double>(xs.size());
  return q;
}

// ---------------------------------------------------------------- commands

namespace {

ordered_json quantiles_json(const QuantileSummary& q) {
  return {{"count", q.count}, {"median", q.median}, {"q10", q.q10}, {"q90", q.q90}, {"mean", q.mean}};
}

ordered_json params_json(const GammaParams& p) {
  return {{"t", p.t},
          {"gamma", p.gamma},
          {"Gamma", p.threshold()},
          {"scale", p.scale()},
          {"indeterminate_radius", p.indeterminate_radius()}};
}

ordered_json decomposition_json(const Potential& P, const ValleyDecomposition& d) {
  ordered_json j;
  j["K"] = d.K;
  j["n_f"] = d.n_f;
  j["n_plus"] = d.n_plus;
  j["n_minus"] = d.n_minus;
  j["case_At"] = d.case_At;
  j["M"] = d.M;
  j["m"] = d.m;
  ordered_json U = ordered_json::array();
  for (const auto& u : d.U) U.push_back({u.lo, u.hi});
  j["U"] = U;
  const auto& c = d.central;
  j["central"] = {{"M0", c.M0},
                  {"m0_minus", c.m0_minus},
                  {"m0_plus", c.m0_plus},
                  {"M1_minus", c.M1_minus},
                  {"M1_plus", c.M1_plus},
                  {"depth_left", c.depth_left},
                  {"depth_right", c.depth_right},
                  {"case_At", c.case_At}};
  if (!c.case_At) j["central"]["merged_m"] = c.merged_m;
  j["right_fringe"] = to_string(d.right_fringe);
  j["left_fringe"] = to_string(d.left_fringe);
  ordered_json valleys = ordered_json::array();
  for (int i = 1; i <= d.n_f; ++i) {
    const Valley v = d.valley(i);
    const Refinement rr = refine_right(P, v);
    const Refinement rl = refine_left(P, v);
    valleys.push_back({{"index", i},
                       {"M_left", v.M_left},
                       {"m", v.m},
                       {"M_right", v.M_right},
                       {"depth", depth(P, v)},
                       {"refine_right", {{"M1", rr.M1}, {"m1", rr.m1}, {"drop", rr.drop}}},
                       {"refine_left", {{"M1", rl.M1}, {"m1", rl.m1}, {"drop", rl.drop}}}});
  }
  j["valleys"] = valleys;
  return j;
}

ordered_json good_env_json(const GoodEnvReport& g) {
  return {{"vf_size", g.vf_size},       {"vf_ok", g.vf_ok},           {"min_spacing", g.min_spacing},
          {"max_spacing", g.max_spacing}, {"spacing_ok", g.spacing_ok}, {"no_subvalley", g.no_subvalley},
          {"worst_refinement", g.worst_refinement}, {"ok", g.ok}};
}

fs::path out_path(const ExperimentConfig& cfg, const char* name) { return fs::path(cfg.output.dir) / name; }

void emit_json(const ExperimentConfig& cfg, const char* name, const ordered_json& j, CommandResult& res) {
  if (!cfg.wants("json")) return;
  const auto p = out_path(cfg, name);
  io::write_json(p, j);
  res.written.push_back(p);
}

void emit_csv(const ExperimentConfig& cfg, const char* name, const io::CsvWriter& csv, CommandResult& res) {
  if (!cfg.wants("csv")) return;
  const auto p = out_path(cfg, name);
  csv.save(p);
  res.written.push_back(p);
}

void emit_svg(const ExperimentConfig& cfg, const char* name, const std::string& svg, CommandResult& res) {
  if (!cfg.output.svg) return;
  const auto p = out_path(cfg, name);
  io::write_text(p, svg);
  res.written.push_back(p);
}

ordered_json report_head(const ExperimentConfig& cfg, const char* command) {
  ordered_json j;
  j["command"] = command;
  j["config"] = to_json(cfg);
  return j;
}

CommandResult valleys_report(const ExperimentConfig& cfg, const Potential& P, const ValleyDecomposition& d,
                             const GammaParams& params, Site lo, Site hi) {
  CommandResult res;
  ordered_json j = report_head(cfg, "valleys");
  j["params"] = params_json(params);
  j["window"] = {lo, hi};
  j["sigma2"] = P.sigma2();
  j["decomposition"] = decomposition_json(P, d);
  j["good_environment"] = good_env_json(check_good_environment(P, d, 40.0, 0.01, 40.0));
  io::ensure_dir(cfg.output.dir);
  emit_json(cfg, "valleys.json", j, res);
  io::CsvWriter csv({"index", "M_left", "m", "M_right", "depth"});
  for (int i = 1; i <= d.n_f; ++i) {
    const Valley v = d.valley(i);
    csv.cell(i).cell(static_cast<std::int64_t>(v.M_left)).cell(static_cast<std::int64_t>(v.m));
    csv.cell(static_cast<std::int64_t>(v.M_right)).cell(depth(P, v));
    csv.end_row();
  }
  emit_csv(cfg, "valleys.csv", csv, res);
  emit_svg(cfg, "valleys.svg", io::potential_svg(P, d), res);
  res.message = "n_f = " + std::to_string(d.n_f);
  return res;
}

template <class Trial, class Fn>
std::vector<Trial> run_trials(const ExperimentConfig& cfg, int count, Fn&& fn) {
  std::vector<Trial> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), resolve_workers(cfg.sim.workers),
               [&](std::size_t k) { out[k] = fn(static_cast<std::uint64_t>(k)); });
  return out;
}

}  // namespace

CommandResult cmd_env(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto dist = EnvDistribution::make(cfg.env.kind, cfg.env.rho0);
  const Environment env = sample_environment(dist, cfg.env.lo, cfg.env.hi, cfg.env.seed);
  const Potential P = compute_potential(env);
  CommandResult res;
  io::ensure_dir(cfg.output.dir);
  const auto p = out_path(cfg, "env.csv");
  io::write_text(p, io::environment_csv(env, P));
  res.written.push_back(p);
  res.message = "wrote " + std::to_string(env.size()) + " sites";
  return res;
}

CommandResult cmd_valleys(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto params = GammaParams::make(cfg.sim.t, cfg.valleys.gamma);
  const auto dist = EnvDistribution::make(cfg.env.kind, cfg.env.rho0);
  const Environment env = sample_environment(dist, cfg.env.lo, cfg.env.hi, cfg.env.seed);
  try {
    const CoverResult cover = construct_cover(env, params, cfg.valleys.K,
                                              AdaptiveWindow{cfg.valleys.chunk_factor, cfg.valleys.cap_factor});
    return valleys_report(cfg, cover.potential, cover.decomposition, params, cover.environment.lo(),
                          cover.environment.hi());
  } catch (const ScanIncomplete& e) {
    return CommandResult{exit_scan_incomplete, std::string("scan incomplete: ") + e.what(), {}};
  }
}

CommandResult cmd_valleys(const ExperimentConfig& cfg, const Potential& P) {
  validate(cfg);
  const auto params = GammaParams::make(cfg.sim.t, cfg.valleys.gamma);
  try {
    const ValleyDecomposition d = construct_cover(P, params, cfg.valleys.K);
    return valleys_report(cfg, P, d, params, P.lo(), P.hi());
  } catch (const ScanIncomplete& e) {
    return CommandResult{exit_scan_incomplete, std::string("scan incomplete: ") + e.what(), {}};
  }
}

CommandResult cmd_simulate(const ExperimentConfig& cfg) {
  validate(cfg);
  const double t = cfg.sim.t;
  const auto trials = run_trials<Theorem1Trial>(cfg, cfg.sim.trials,
                                                [&](std::uint64_t k) { return run_theorem1_trial(cfg, k, t); });
  CommandResult res;
  ordered_json j = report_head(cfg, "simulate");
  ordered_json rows = ordered_json::array();
  io::CsvWriter csv({"trial", "ok", "n_f", "F_emp", "F_pred", "abs_err", "rel_err", "particles", "leaked", "error"});
  std::vector<double> abs_errs, rel_errs;
  int failed = 0;
  for (const auto& r : trials) {
    ordered_json row = {{"trial", r.trial}, {"ok", r.ok}};
    if (r.ok) {
      row["n_f"] = r.n_f;
      row["F_emp"] = r.F_emp;
      row["F_pred"] = r.F_pred;
      row["abs_err"] = r.abs_err;
      row["rel_err"] = r.n_f > 0 ? ordered_json(r.rel_err) : ordered_json(nullptr);
      row["particles"] = r.particles;
      row["leaked"] = r.leaked;
      abs_errs.push_back(r.abs_err);
      if (r.n_f > 0) rel_errs.push_back(r.rel_err);
    } else {
      row["error"] = r.error;
      ++failed;
    }
    rows.push_back(row);
    csv.cell(static_cast<std::int64_t>(r.trial)).cell(r.ok).cell(r.n_f).cell(r.F_emp).cell(r.F_pred);
    csv.cell(r.abs_err).cell(r.rel_err).cell(r.particles).cell(r.leaked).cell(std::string_view(r.error));
    csv.end_row();
  }
  j["theorem1"] = {{"t", t},
                   {"trials", rows},
                   {"failed", failed},
                   {"abs_err", quantiles_json(quantiles(abs_errs))},
                   {"rel_err", quantiles_json(quantiles(rel_errs))}};
  io::ensure_dir(cfg.output.dir);
  emit_json(cfg, "simulate.json", j, res);
  emit_csv(cfg, "simulate.csv", csv, res);
  res.message = "median |F_emp - F_pred| = " + io::format_double(quantiles(abs_errs).median);
  return res;
}

CommandResult cmd_localize(const ExperimentConfig& cfg) {
  validate(cfg);
  const double t = cfg.sim.t;
  const auto trials = run_trials<LocalizeTrial>(
      cfg, cfg.sim.trials, [&](std::uint64_t k) { return run_localize_trial(cfg, k, t, true, true); });
  CommandResult res;
  ordered_json j = report_head(cfg, "localize");
  ordered_json loc = ordered_json::array();
  ordered_json mig = ordered_json::array();
  io::CsvWriter loc_csv({"trial", "valley", "m", "start", "kind", "mass"});
  io::CsvWriter mig_csv({"trial", "n_f", "origin_mass", "moved_mass", "cross_fraction", "influx_from_outside",
                         "indeterminate_mass"});
  const double threshold = cfg.check.localization_mass;
  int bottoms = 0, bottoms_ok = 0, starts = 0, starts_ok = 0;
  double cross_sum = 0.0, influx_sum = 0.0;
  int mig_count = 0;
  for (const auto& r : trials) {
    if (!r.ok) {
      loc.push_back({{"trial", r.trial}, {"error", r.error}});
      continue;
    }
    for (const auto& v : r.localization.valleys) {
      ++bottoms;
      bottoms_ok += v.bottom_mass >= threshold ? 1 : 0;
      loc.push_back({{"trial", r.trial},
                     {"valley_index", v.valley_index},
                     {"m", v.m},
                     {"cte", r.localization.cte},
                     {"radius", r.localization.radius},
                     {"bottom_mass", v.bottom_mass},
                     {"starts", v.starts},
                     {"start_mass", v.start_mass}});
      loc_csv.cell(static_cast<std::int64_t>(r.trial)).cell(v.valley_index).cell(static_cast<std::int64_t>(v.m));
      loc_csv.cell(static_cast<std::int64_t>(v.m)).cell(std::string_view("bottom")).cell(v.bottom_mass);
      loc_csv.end_row();
      for (std::size_t k = 0; k < v.starts.size(); ++k) {
        ++starts;
        starts_ok += v.start_mass[k] >= threshold ? 1 : 0;
        loc_csv.cell(static_cast<std::int64_t>(r.trial)).cell(v.valley_index).cell(static_cast<std::int64_t>(v.m));
        loc_csv.cell(static_cast<std::int64_t>(v.starts[k])).cell(std::string_view("start")).cell(v.start_mass[k]);
        loc_csv.end_row();
      }
    }
    if (r.migration_done) {
      const auto& m = r.migration;
      double origin = 0.0, moved = 0.0;
      for (std::size_t i = 0; i < m.origin_mass.size(); ++i) {
        origin += m.origin_mass[i];
        moved += m.elsewhere[i];
      }
      mig.push_back({{"trial", r.trial},
                     {"n_f", m.n_f},
                     {"origin_mass", m.origin_mass},
                     {"stayed", m.stayed},
                     {"cross_valley", m.cross_valley},
                     {"cross_fraction", m.cross_fraction},
                     {"influx_from_outside", m.influx_from_outside},
                     {"indeterminate_mass", m.indeterminate_mass}});
      mig_csv.cell(static_cast<std::int64_t>(r.trial)).cell(m.n_f).cell(origin).cell(moved);
      mig_csv.cell(m.cross_fraction).cell(m.influx_from_outside).cell(m.indeterminate_mass);
      mig_csv.end_row();
      if (m.n_f > 0) {
        cross_sum += m.cross_fraction;
        influx_sum += m.influx_from_outside;
        ++mig_count;
      }
    }
  }
  j["localization"] = loc;
  j["localization_summary"] = {
      {"threshold", threshold},
      {"bottoms", bottoms},
      {"bottom_fraction", bottoms > 0 ? static_cast<double>(bottoms_ok) / bottoms : 0.0},
      {"starts", starts},
      {"start_fraction", starts > 0 ? static_cast<double>(starts_ok) / starts : 0.0}};
  j["migration"] = {{"trials", mig},
                    {"mean_cross_fraction", mig_count > 0 ? cross_sum / mig_count : 0.0},
                    {"mean_influx_from_outside", mig_count > 0 ? influx_sum / mig_count : 0.0},
                    {"scale", GammaParams::make(t, cfg.valleys.gamma).scale()}};
  io::ensure_dir(cfg.output.dir);
  emit_json(cfg, "localize.json", j, res);
  emit_csv(cfg, "localization.csv", loc_csv, res);
  emit_csv(cfg, "migration.csv", mig_csv, res);
  res.message = std::to_string(bottoms_ok) + "/" + std::to_string(bottoms) + " bottoms localized";
  return res;
}

CommandResult cmd_renewal(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto dist = EnvDistribution::make(cfg.renewal.kind, cfg.renewal.rho0);
  const int workers = resolve_workers(cfg.sim.workers);
  RenewalSample sample = renewal_gap_sample(dist, cfg.renewal.Gamma, cfg.renewal.envs, cfg.renewal.extrema,
                                            cfg.env.seed, 50'000'000, workers);
  const NfSample nf = sample_nf(cfg);
  sample.n_f_samples = nf.n_f;
  sample.supp_rescaled = 2.0 * cfg.renewal.nf_K;
  const std::uint64_t boot_seed = derive_key(cfg.env.seed, Stream::bootstrap, 0);
  const auto laplace = empirical_laplace(sample.gaps, cfg.observables.lambdas, boot_seed, cfg.renewal.bootstrap);
  const auto half_laplace = empirical_laplace(sample.half_gaps, cfg.observables.lambdas, boot_seed, cfg.renewal.bootstrap);
  const auto gs = summarize(sample.gaps);
  const auto hs = summarize(sample.half_gaps);

  CommandResult res;
  ordered_json j = report_head(cfg, "renewal");
  auto summary_json = [](const SampleSummary& s) {
    return ordered_json{{"count", s.count}, {"mean", s.mean},   {"variance", s.variance},
                        {"std_error", s.std_error}, {"min", s.min}, {"max", s.max}};
  };
  auto laplace_json = [](const std::vector<LaplaceRow>& rows) {
    ordered_json a = ordered_json::array();
    for (const auto& r : rows) {
      a.push_back({{"lambda", r.lambda},
                   {"empirical", r.empirical},
                   {"ci_low", r.ci_low},
                   {"ci_high", r.ci_high},
                   {"paper_value", r.paper_value},
                   {"alternative_value", r.alternative_value}});
    }
    return a;
  };
  const NfStatistics ns = nf.n_f.empty() ? NfStatistics{} : nf_statistics(sample);
  ordered_json cands = ordered_json::array();
  for (const auto& c : ns.candidates) {
    cands.push_back({{"convention", c.name},
                     {"supp", c.supp},
                     {"mean_paper", c.mean_paper},
                     {"var_paper", c.var_paper},
                     {"var_alternative", c.var_alternative}});
  }
  j["renewal"] = {
      {"sigma2", sample.sigma2},
      {"Gamma", sample.Gamma},
      {"envs_used", sample.envs_used},
      {"envs_skipped", sample.envs_skipped},
      {"gaps_summary", summary_json(gs)},
      {"half_gaps_summary", summary_json(hs)},
      {"lag1_autocorrelation", lag1_autocorrelation(sample)},
      {"laplace", laplace_json(laplace)},
      {"half_gap_laplace", laplace_json(half_laplace)},
      {"nf",
       {{"t", cfg.renewal.nf_t},
        {"K", cfg.renewal.nf_K},
        {"samples", ns.count},
        {"skipped", nf.skipped},
        {"mean_emp", ns.mean_emp},
        {"var_emp", ns.var_emp},
        {"convention", ns.convention},
        {"supp", ns.supp},
        {"mean_paper", ns.mean_paper},
        {"var_paper", ns.var_paper},
        {"var_ratio_paper", ns.var_paper > 0.0 ? ns.var_emp / ns.var_paper : 0.0},
        {"var_alternative", ns.var_alternative},
        {"var_ratio_alternative", ns.var_alternative > 0.0 ? ns.var_emp / ns.var_alternative : 0.0},
        {"jarque_bera", ns.jarque_bera},
        {"jarque_bera_p", ns.jarque_bera_p},
        {"candidates", cands}}}};
  io::ensure_dir(cfg.output.dir);
  emit_json(cfg, "renewal.json", j, res);
  io::CsvWriter gaps_csv({"env", "index", "gap"});
  for (std::size_t e = 0; e + 1 < sample.env_offsets.size(); ++e) {
    for (std::size_t k = sample.env_offsets[e]; k < sample.env_offsets[e + 1]; ++k) {
      gaps_csv.cell(e).cell(k - sample.env_offsets[e]).cell(sample.gaps[k]);
      gaps_csv.end_row();
    }
  }
  emit_csv(cfg, "gaps.csv", gaps_csv, res);
  io::CsvWriter lap_csv({"lambda", "empirical", "ci_low", "ci_high", "paper_value", "alternative_value"});
  for (const auto& r : laplace) {
    lap_csv.cell(r.lambda).cell(r.empirical).cell(r.ci_low).cell(r.ci_high).cell(r.paper_value).cell(r.alternative_value);
    lap_csv.end_row();
  }
  emit_csv(cfg, "laplace.csv", lap_csv, res);
  emit_svg(cfg, "gaps.svg", io::gaps_svg(sample.gaps), res);
  res.message = "gap mean " + io::format_double(gs.mean) + " over " + std::to_string(gs.count) + " gaps";
  return res;
}

CommandResult cmd_check(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto results = run_acceptance(cfg);
  CommandResult res;
  ordered_json j = report_head(cfg, "check");
  ordered_json arr = ordered_json::array();
  io::CsvWriter csv({"criterion", "name", "pass", "flagged", "summary"});
  bool all = true;
  for (const auto& r : results) {
    arr.push_back(to_json(r));
    csv.cell(r.id).cell(std::string_view(r.name)).cell(r.pass).cell(r.flagged).cell(std::string_view(r.summary));
    csv.end_row();
    all = all && r.pass;
  }
  j["criteria"] = arr;
  j["passed"] = all;
  io::ensure_dir(cfg.output.dir);
  emit_json(cfg, "check.json", j, res);
  emit_csv(cfg, "check.csv", csv, res);
  res.exit_code = all ? exit_ok : exit_check_failed;
  res.message = all ? "all criteria passed" : "some criteria failed";
  return res;
}

}  // namespace sinai
