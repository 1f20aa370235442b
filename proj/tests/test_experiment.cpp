#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "sinai/acceptance.hpp"
#include "sinai/errors.hpp"
#include "sinai/experiment.hpp"
#include "sinai/report_io.hpp"

using namespace sinai;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "sinai_test_experiment" / name;
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.env.seed = 3;
  cfg.env.lo = -50;
  cfg.env.hi = 50;
  cfg.sim.t = 2000.0;
  cfg.sim.trials = 2;
  cfg.valleys.K = 2.0;
  cfg.renewal.Gamma = 8.0;
  cfg.renewal.envs = 20;
  cfg.renewal.extrema = 8;
  cfg.renewal.bootstrap = 20;
  cfg.renewal.nf_seeds = 20;
  cfg.renewal.nf_t = 1e4;
  cfg.renewal.nf_K = 3.0;
  cfg.observables.starts_per_valley = 2;
  cfg.output.dir = dir.string();
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SINAI_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  fs::create_directories(dir);
  const auto p = dir / "config.json";
  io::write_text(p, j.dump());
  return p;
}

}  // namespace

TEST_CASE("default config validates and round trips through JSON") {
  const ExperimentConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  const auto j = to_json(cfg);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("committed configs load") {
  for (const char* name : {"configs/check_full.json", "configs/check_quick.json"}) {
    CAPTURE(name);
    const auto cfg = load_config(fs::path(SINAI_SOURCE_DIR) / name);
    CHECK_NOTHROW(validate(cfg));
  }
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"env": {"seeed": 1}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"bogus": {}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"sim": {"t": "big"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"sim": {"trials": 1.5}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"sim": {"engine": "warp"}})")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  ExperimentConfig cfg;
  cfg.valleys.K = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env.lo = cfg.env.hi = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env.rho0 = 0.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = ExperimentConfig{};
  cfg.sim.lambda = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = ExperimentConfig{};
  cfg.check.criteria = {9};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(2.0) == "2");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(io::format_double(x)) == x);
  CHECK(io::format_double(1e300) == "1.0000000000000001e+300");
}

TEST_CASE("CSV writer") {
  io::CsvWriter csv({"a", "b", "c"});
  csv.cell(std::string_view("x,y")).cell(std::string_view("say \"hi\"")).cell(1.5);
  csv.end_row();
  CHECK(csv.str() == "a,b,c\r\n\"x,y\",\"say \"\"hi\"\"\",1.5\r\n");
  csv.cell(1);
  CHECK_THROWS(csv.end_row());
  io::CsvWriter full({"only"});
  full.cell(true);
  CHECK_THROWS(full.cell(false));
}

TEST_CASE("JSON dumps are indented and end with a newline") {
  nlohmann::ordered_json j;
  j["b"] = 1;
  j["a"] = {1, 2};
  CHECK(io::dump_json(j) == "{\n  \"b\": 1,\n  \"a\": [\n    1,\n    2\n  ]\n}\n");
}

TEST_CASE("env command creates its directory and is reproducible") {
  const auto dir = scratch("env") / "nested" / "deeper";
  auto cfg = small_config(dir);
  const auto res = cmd_env(cfg);
  CHECK(res.exit_code == exit_ok);
  REQUIRE(fs::exists(dir / "env.csv"));
  const auto first = io::read_text(dir / "env.csv");
  CHECK(first.rfind("index,alpha,S\r\n", 0) == 0);
  CHECK(cmd_env(cfg).exit_code == exit_ok);
  CHECK(io::read_text(dir / "env.csv") == first);
  // 101 sites plus the header.
  std::size_t rows = 0;
  for (std::size_t p = first.find("\r\n"); p != std::string::npos; p = first.find("\r\n", p + 2)) ++rows;
  CHECK(rows == 102);
}

TEST_CASE("valleys command on the worked fixture") {
  const auto dir = scratch("valleys_fixture");
  auto cfg = small_config(dir);
  cfg.sim.t = std::exp(3.0);
  cfg.valleys.K = 1.0;
  const auto res = cmd_valleys(cfg, worked_potential());
  REQUIRE(res.exit_code == exit_ok);
  const auto j = nlohmann::json::parse(io::read_text(dir / "valleys.json"));
  const auto& d = j["decomposition"];
  CHECK(d["n_f"] == 1);
  CHECK(d["M"] == nlohmann::json::array({-3, 8}));
  CHECK(d["m"] == nlohmann::json::array({3}));
  CHECK(d["case_At"] == false);
  CHECK(d["valleys"][0]["refine_right"]["drop"] == 1.0);
}

TEST_CASE("valleys command on a flat fixture reports an incomplete scan") {
  auto cfg = small_config(scratch("valleys_flat"));
  cfg.sim.t = std::exp(3.0);
  cfg.valleys.K = 1.0;
  const auto flat = Potential::from_values(-10, std::vector<double>(21, 0.0));
  CHECK(cmd_valleys(cfg, flat).exit_code == exit_scan_incomplete);
}

TEST_CASE("simulate is reproducible and linear in lambda for the prediction") {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const auto c = scratch("sim_c");
  auto cfg = small_config(a);
  cfg.sim.trials = 1;
  REQUIRE(cmd_simulate(cfg).exit_code == exit_ok);
  cfg.output.dir = b.string();
  REQUIRE(cmd_simulate(cfg).exit_code == exit_ok);
  CHECK(io::read_text(a / "simulate.csv") == io::read_text(b / "simulate.csv"));

  cfg.output.dir = c.string();
  cfg.sim.lambda = 2.0;
  REQUIRE(cmd_simulate(cfg).exit_code == exit_ok);
  const auto one = nlohmann::json::parse(io::read_text(a / "simulate.json"))["theorem1"]["trials"][0];
  const auto two = nlohmann::json::parse(io::read_text(c / "simulate.json"))["theorem1"]["trials"][0];
  REQUIRE(one["ok"] == true);
  CHECK(two["F_pred"].get<double>() == doctest::Approx(2.0 * one["F_pred"].get<double>()));
}

TEST_CASE("worker count does not change reports") {
  const auto a = scratch("workers_1");
  const auto b = scratch("workers_3");
  auto cfg = small_config(a);
  cfg.sim.trials = 3;
  cfg.sim.workers = 1;
  REQUIRE(cmd_localize(cfg).exit_code == exit_ok);
  cfg.output.dir = b.string();
  cfg.sim.workers = 3;
  REQUIRE(cmd_localize(cfg).exit_code == exit_ok);
  for (const char* f : {"localize.json", "localization.csv", "migration.csv"}) {
    CAPTURE(f);
    auto ja = io::read_text(a / f);
    auto jb = io::read_text(b / f);
    if (std::string(f) == "localize.json") {
      // The echoed config differs in output.dir and sim.workers only.
      auto pa = nlohmann::json::parse(ja);
      auto pb = nlohmann::json::parse(jb);
      pa.erase("config");
      pb.erase("config");
      CHECK(pa == pb);
    } else {
      CHECK(ja == jb);
    }
  }
}

TEST_CASE("renewal command writes its tables") {
  const auto dir = scratch("renewal");
  auto cfg = small_config(dir);
  cfg.output.svg = true;
  REQUIRE(cmd_renewal(cfg).exit_code == exit_ok);
  for (const char* f : {"renewal.json", "gaps.csv", "laplace.csv", "gaps.svg"}) CHECK(fs::exists(dir / f));
  const auto j = nlohmann::json::parse(io::read_text(dir / "renewal.json"));
  const auto& row0 = j["renewal"]["laplace"][0];
  CHECK(row0["lambda"] == 0.0);
  CHECK(row0["empirical"] == 1.0);
  CHECK(j["renewal"]["envs_used"] == 20);
}

TEST_CASE("CLI exit codes") {
  const auto dir = scratch("cli");
  const auto out = (dir / "out").string();
  CHECK(run_cli("env --seed 4 --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "env.csv"));
  CHECK(run_cli("") == exit_config);
  CHECK(run_cli("teleport") == exit_config);
  CHECK(run_cli("env --trials nope") == exit_config);

  const auto zero_k = write_config(dir / "k0", {{"valleys", {{"K", 0.0}}}});
  CHECK(run_cli("valleys --config " + zero_k.string() + " --out " + out) == exit_config);

  const auto typo = write_config(dir / "typo", {{"sim", {{"trails", 3}}}});
  CHECK(run_cli("env --config " + typo.string() + " --out " + out) == exit_config);

  // A cap far below the valley scale cannot close the scans.
  const auto capped = write_config(dir / "cap", {{"sim", {{"t", 1e6}}},
                                                 {"valleys", {{"chunk_factor", 1e-3}, {"cap_factor", 1e-3}}}});
  CHECK(run_cli("valleys --config " + capped.string() + " --out " + out) == exit_scan_incomplete);
}
