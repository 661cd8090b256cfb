#include "ssvb/harness/config.hpp"

#include <fstream>
#include <set>

namespace ssvb::harness {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::logistic ? "logistic" : "hdp";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::taylor_cv: return "taylor-cv";
    case Method::jj_cv: return "jj-cv";
    case Method::jj_bound: return "jj-bound";
    case Method::laplace: return "laplace";
    case Method::ss_no_cv: return "ss-no-cv";
    case Method::hdp_stochastic: return "hdp-stochastic";
    case Method::hdp_point: return "hdp-point";
    case Method::hdp_uniform: return "hdp-uniform";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "hdp") return ModelKind::hdp;
  throw ConfigError("unknown model kind: " + s);
}

Method method_from_string(const std::string& s) {
  if (s == "taylor-cv") return Method::taylor_cv;
  if (s == "jj-cv") return Method::jj_cv;
  if (s == "jj-bound") return Method::jj_bound;
  if (s == "laplace") return Method::laplace;
  if (s == "ss-no-cv") return Method::ss_no_cv;
  if (s == "hdp-stochastic") return Method::hdp_stochastic;
  if (s == "hdp-point") return Method::hdp_point;
  if (s == "hdp-uniform") return Method::hdp_uniform;
  throw ConfigError("unknown method: " + s);
}

bool method_matches_model(Method method, ModelKind kind) {
  const bool hdp_method = method == Method::hdp_stochastic ||
                          method == Method::hdp_point ||
                          method == Method::hdp_uniform;
  return (kind == ModelKind::hdp) == hdp_method;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (known.find(key) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!method_matches_model(method, model)) {
    throw ConfigError("method " + to_string(method) +
                      " does not apply to model " + to_string(model));
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  try {
    schedule.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (pilot_samples < 2) throw ConfigError("pilot_samples must be >= 2");
  if (min_samples < 1) throw ConfigError("min_samples must be >= 1");
  if (max_samples < min_samples) {
    throw ConfigError("max_samples must be >= min_samples");
  }
  if (eval_samples < 2) throw ConfigError("eval_samples must be >= 2");
  if (monitor_samples < 2) throw ConfigError("monitor_samples must be >= 2");
  if (!(prior_scale > 0.0)) throw ConfigError("prior_scale must be > 0");
  if (convergence_window < 2) throw ConfigError("convergence_window must be >= 2");
  if (convergence_rel_tol < 0.0) {
    throw ConfigError("convergence_rel_tol must be >= 0");
  }
  if (model == ModelKind::logistic && dataset.empty()) {
    throw ConfigError("logistic model requires a dataset path");
  }
  if (model == ModelKind::hdp) {
    try {
      hdp.spec().validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = to_string(model);
  j["method"] = to_string(method);
  j["dataset"] = dataset;
  j["label_column"] = label_column;
  j["standardize"] = standardize;
  j["epsilon"] = epsilon;
  j["schedule"] = {{"rho0", schedule.rho0}, {"w", schedule.w}, {"eta", schedule.eta}};
  j["budget"] = {{"max_iterations", max_iterations},
                 {"max_total_samples", max_total_samples}};
  j["pilot_samples"] = pilot_samples;
  j["min_samples"] = min_samples;
  j["max_samples"] = max_samples;
  j["eval_samples"] = eval_samples;
  j["monitor_samples"] = monitor_samples;
  j["strict_pilot"] = strict_pilot;
  j["max_step"] = max_step;
  j["convergence_window"] = convergence_window;
  j["convergence_rel_tol"] = convergence_rel_tol;
  if (seed_set) j["seed"] = seed;
  j["prior_scale"] = prior_scale;
  if (model == ModelKind::hdp) {
    j["hdp"] = {{"K", hdp.K},
                {"D", hdp.D},
                {"alpha", hdp.alpha},
                {"beta", hdp.beta},
                {"kappa1", hdp.kappa1},
                {"kappa2", hdp.kappa2},
                {"data_seed", hdp.data_seed},
                {"full_dirichlet_score", hdp.full_dirichlet_score},
                {"normalize_step", hdp.normalize_step}};
  }
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(
      j,
      {"model", "method", "dataset", "label_column", "standardize", "epsilon",
       "schedule", "budget", "pilot_samples", "min_samples", "max_samples",
       "eval_samples", "monitor_samples", "strict_pilot", "max_step",
       "convergence_window", "convergence_rel_tol", "seed", "prior_scale",
       "hdp"},
      "config");

  ExperimentConfig cfg;
  if (j.contains("model")) {
    cfg.model = model_kind_from_string(j.at("model").get<std::string>());
  }
  if (j.contains("method")) {
    cfg.method = method_from_string(j.at("method").get<std::string>());
  }
  read_field(j, "dataset", cfg.dataset);
  read_field(j, "label_column", cfg.label_column);
  read_field(j, "standardize", cfg.standardize);
  read_field(j, "epsilon", cfg.epsilon);
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    reject_unknown_keys(s, {"rho0", "w", "eta"}, "schedule");
    read_field(s, "rho0", cfg.schedule.rho0);
    read_field(s, "w", cfg.schedule.w);
    read_field(s, "eta", cfg.schedule.eta);
  }
  if (j.contains("budget")) {
    const json& b = j.at("budget");
    reject_unknown_keys(b, {"max_iterations", "max_total_samples"}, "budget");
    read_field(b, "max_iterations", cfg.max_iterations);
    read_field(b, "max_total_samples", cfg.max_total_samples);
  }
  read_field(j, "pilot_samples", cfg.pilot_samples);
  read_field(j, "min_samples", cfg.min_samples);
  read_field(j, "max_samples", cfg.max_samples);
  read_field(j, "eval_samples", cfg.eval_samples);
  read_field(j, "monitor_samples", cfg.monitor_samples);
  read_field(j, "strict_pilot", cfg.strict_pilot);
  read_field(j, "max_step", cfg.max_step);
  read_field(j, "convergence_window", cfg.convergence_window);
  read_field(j, "convergence_rel_tol", cfg.convergence_rel_tol);
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<unsigned long>();
    cfg.seed_set = true;
  }
  read_field(j, "prior_scale", cfg.prior_scale);
  if (j.contains("hdp")) {
    const json& h = j.at("hdp");
    reject_unknown_keys(h,
                        {"K", "D", "alpha", "beta", "kappa1", "kappa2",
                         "data_seed", "full_dirichlet_score",
                         "normalize_step"},
                        "hdp");
    read_field(h, "K", cfg.hdp.K);
    read_field(h, "D", cfg.hdp.D);
    read_field(h, "alpha", cfg.hdp.alpha);
    read_field(h, "beta", cfg.hdp.beta);
    read_field(h, "kappa1", cfg.hdp.kappa1);
    read_field(h, "kappa2", cfg.hdp.kappa2);
    read_field(h, "data_seed", cfg.hdp.data_seed);
    read_field(h, "full_dirichlet_score", cfg.hdp.full_dirichlet_score);
    read_field(h, "normalize_step", cfg.hdp.normalize_step);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace ssvb::harness
