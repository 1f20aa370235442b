#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sinai/experiment.hpp"

namespace sinai {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool flagged = false;  // passed against a documented alternative
  std::string summary;
  nlohmann::ordered_json data;
};

nlohmann::ordered_json to_json(const CriterionResult& r);

/// The worked potential W on sites -5..9.
Potential worked_potential();

CriterionResult criterion_valley_oracle(const ExperimentConfig& cfg);
CriterionResult criterion_worked_fixture(const ExperimentConfig& cfg);
CriterionResult criterion_engines(const ExperimentConfig& cfg);
CriterionResult criterion_localization(const ExperimentConfig& cfg);
CriterionResult criterion_theorem_trend(const ExperimentConfig& cfg);
CriterionResult criterion_migration(const ExperimentConfig& cfg);
CriterionResult criterion_renewal(const ExperimentConfig& cfg);
CriterionResult criterion_nf(const ExperimentConfig& cfg);

/// Dispatches criteria 1..8.
CriterionResult run_criterion(int id, const ExperimentConfig& cfg);

/// Runs cfg.check.criteria in order.
std::vector<CriterionResult> run_acceptance(const ExperimentConfig& cfg);

}  // namespace sinai
