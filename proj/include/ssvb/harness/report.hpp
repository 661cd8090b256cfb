#pragma once

#include <string>
#include <vector>

#include "ssvb/harness/config.hpp"

namespace ssvb::harness {

// Everything needed to reproduce and compare a run: config echo, seed, the
// per-iteration trace and the final high-sample evaluation of the true
// objective.
struct RunReport {
  ExperimentConfig config;
  unsigned long seed = 0;
  std::string objective_kind;  // "elbo-mc" or "plugin"
  double final_elbo = 0.0;
  double final_elbo_se = 0.0;
  long final_eval_samples = 0;
  bool converged = false;
  std::string stop_reason;
  long long total_samples = 0;
  std::vector<std::string> flags;  // e.g. "variance budget saturated"
  AscentTrace trace;

  json to_json() const;
  static RunReport from_json(const json& j);
  void save(const std::string& path) const;
  static RunReport load(const std::string& path);

  std::string dataset_label() const;
};

// Per-iteration diagnostic series (t, S, variance ratio, a^, rho, ELBO and
// the counterfactual sample requirement without variance reduction) as CSV.
// Throws std::invalid_argument on an empty trace.
std::string diagnostics_csv(const AscentTrace& trace);
void diagnostics_export(const AscentTrace& trace, const std::string& path);

}  // namespace ssvb::harness
