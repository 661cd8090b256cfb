#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "ssvb/hdp.hpp"
#include "ssvb/schedule.hpp"

namespace ssvb::harness {

using nlohmann::json;

enum class ModelKind { logistic, hdp };
enum class Method {
  taylor_cv,
  jj_cv,
  jj_bound,
  laplace,
  ss_no_cv,
  hdp_stochastic,
  hdp_point,
  hdp_uniform,
};

std::string to_string(ModelKind kind);
std::string to_string(Method method);
ModelKind model_kind_from_string(const std::string& s);
Method method_from_string(const std::string& s);
bool method_matches_model(Method method, ModelKind kind);

struct HdpConfig {
  int K = 20;
  int D = 100;
  double alpha = 1.0;
  double beta = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 2.0;
  // Seed for the synthetic hierarchy when no dataset path is given; keeping
  // it separate from the run seed lets methods share identical data.
  unsigned long data_seed = 1;
  bool full_dirichlet_score = false;
  bool normalize_step = true;

  HDPSpec spec() const {
    return HDPSpec{K, D, alpha, beta, kappa1, kappa2};
  }
};

// Thrown for malformed or out-of-range configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::logistic;
  Method method = Method::taylor_cv;
  std::string dataset;  // CSV path; empty for synthetic HDP data
  std::string label_column = "label";
  bool standardize = false;

  double epsilon = 0.1;
  StepSchedule schedule{0.1, 10.0, 0.75};
  int max_iterations = 2000;
  long long max_total_samples = -1;
  int pilot_samples = 24;
  int min_samples = 8;
  int max_samples = 50000;
  long eval_samples = 100000;
  int monitor_samples = 1024;
  bool strict_pilot = false;
  double max_step = 10.0;
  int convergence_window = 20;
  double convergence_rel_tol = 1e-4;  // 0 disables early stopping

  unsigned long seed = 0;
  bool seed_set = false;

  double prior_scale = 1.0;
  HdpConfig hdp;

  void validate() const;
  json to_json() const;
  // Strict parse: unknown keys are rejected.
  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::string& path);
};

}  // namespace ssvb::harness
