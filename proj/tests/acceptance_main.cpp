// Runs the acceptance criteria at full scale and prints one line per
// criterion. Usage: acceptance [--config PATH] [--only N]...

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sinai/acceptance.hpp"
#include "sinai/experiment.hpp"
#include "sinai/report_io.hpp"

namespace fs = std::filesystem;

namespace {

// 9. Two runs of every command on the same config must agree byte for byte.
sinai::CriterionResult criterion_determinism(const fs::path& quick_config) {
  sinai::CriterionResult r{9, "determinism", false, false, "", {}};
  const fs::path root = fs::temp_directory_path() / "sinai_determinism";
  fs::remove_all(root);
  std::vector<std::string> differing;
  std::size_t compared = 0;
  int exit_codes[2] = {0, 0};
  // Both runs use the same config, output directory included; the first
  // run's files are kept in memory before the second overwrites them.
  std::map<std::string, std::string> first;
  for (int run = 0; run < 2; ++run) {
    sinai::ExperimentConfig cfg = sinai::load_config(quick_config);
    cfg.output.dir = root.string();
    exit_codes[run] = sinai::cmd_check(cfg).exit_code;
    sinai::cmd_env(cfg);
    sinai::cmd_valleys(cfg);
    sinai::cmd_simulate(cfg);
    sinai::cmd_localize(cfg);
    sinai::cmd_renewal(cfg);
    if (run == 0) {
      for (const auto& e : fs::directory_iterator(root)) first[e.path().filename().string()] = sinai::io::read_text(e.path());
      fs::remove_all(root);
    }
  }
  std::set<std::string> names;
  for (const auto& [n, _] : first) names.insert(n);
  for (const auto& e : fs::directory_iterator(root)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    ++compared;
    const auto it = first.find(n);
    if (it == first.end() || !fs::exists(root / n) || sinai::io::read_text(root / n) != it->second) {
      differing.push_back(n);
    }
  }
  r.pass = differing.empty() && compared >= 10 && exit_codes[0] == exit_codes[1];
  r.summary = std::to_string(compared - differing.size()) + "/" + std::to_string(compared) +
              " report files byte-identical across two runs";
  r.data = {{"compared", compared}, {"differing", differing}};
  fs::remove_all(root);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path config = fs::path(SINAI_SOURCE_DIR) / "configs" / "check_full.json";
  const fs::path quick = fs::path(SINAI_SOURCE_DIR) / "configs" / "check_quick.json";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--config PATH] [--only N]...\n";
      return 1;
    }
  }
  const sinai::ExperimentConfig cfg = sinai::load_config(config);
  sinai::validate(cfg);

  int failed = 0;
  for (int id = 1; id <= 9; ++id) {
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    sinai::CriterionResult r;
    try {
      r = id == 9 ? criterion_determinism(quick) : sinai::run_criterion(id, cfg);
    } catch (const std::exception& e) {
      r = sinai::CriterionResult{id, "criterion " + std::to_string(id), false, false, std::string("error: ") + e.what(), {}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += r.pass ? 0 : 1;
    std::printf("[%s] %d %s: %s (%.1f s)\n", r.pass ? (r.flagged ? "PASS*" : "PASS") : "FAIL", r.id, r.name.c_str(),
                r.summary.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%s\n", failed == 0 ? "all criteria passed" : (std::to_string(failed) + " criteria failed").c_str());
  return failed == 0 ? 0 : 1;
}
