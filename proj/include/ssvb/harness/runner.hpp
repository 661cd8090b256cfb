#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ssvb/harness/report.hpp"

namespace ssvb::harness {

// Thrown for numerical failures surfaced to the CLI (exit code 3).
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dispatches the configured fitter and finishes with a high-sample
// evaluation of the true objective, so all methods are compared on the same
// footing. Requires config.seed_set.
RunReport run_experiment(const ExperimentConfig& config);

struct TableArtifact {
  std::string csv;
  std::string text;
  json summary;
};

// Method x dataset matrix of final objective values with standard errors,
// plus a rank-fraction summary over every (dataset, seed) group where all
// methods are present. Throws std::invalid_argument for fewer than two
// reports or inconsistent groups.
TableArtifact compare_table(const std::vector<RunReport>& reports);

// Cartesian-product expansion of a base config over axis values addressed
// by dotted key paths (e.g. "hdp.beta"). Each combination is re-validated.
std::vector<ExperimentConfig> expand_grid(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<json>>>& axes);

}  // namespace ssvb::harness
