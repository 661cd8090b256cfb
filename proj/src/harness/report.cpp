#include "ssvb/harness/report.hpp"

#include <fstream>
#include <sstream>

namespace ssvb::harness {

namespace {

json trace_record_to_json(const TraceRecord& rec) {
  json j;
  j["t"] = rec.iteration;
  j["rho"] = rec.step_size;
  j["S"] = rec.sample_count;
  j["a_hat"] = rec.a_hat;
  j["variance_ratio"] = rec.variance_ratio;
  j["elbo"] = rec.elbo;
  j["elbo_se"] = rec.elbo_se;
  j["S_raw"] = rec.samples_required_raw;
  return j;
}

TraceRecord trace_record_from_json(const json& j) {
  TraceRecord rec;
  rec.iteration = j.at("t").get<int>();
  rec.step_size = j.at("rho").get<double>();
  rec.sample_count = j.at("S").get<int>();
  rec.a_hat = j.at("a_hat").get<double>();
  rec.variance_ratio = j.at("variance_ratio").get<double>();
  rec.elbo = j.at("elbo").get<double>();
  rec.elbo_se = j.at("elbo_se").get<double>();
  rec.samples_required_raw = j.at("S_raw").get<double>();
  return rec;
}

}  // namespace

json RunReport::to_json() const {
  json j;
  j["config"] = config.to_json();
  j["seed"] = seed;
  j["objective_kind"] = objective_kind;
  j["final_elbo"] = {{"value", final_elbo},
                     {"std_error", final_elbo_se},
                     {"samples", final_eval_samples}};
  j["converged"] = converged;
  j["stop_reason"] = stop_reason;
  j["total_samples"] = total_samples;
  j["flags"] = flags;
  json records = json::array();
  for (const auto& rec : trace.records) {
    records.push_back(trace_record_to_json(rec));
  }
  j["trace"] = std::move(records);
  return j;
}

RunReport RunReport::from_json(const json& j) {
  RunReport report;
  report.config = ExperimentConfig::from_json(j.at("config"));
  report.seed = j.at("seed").get<unsigned long>();
  report.objective_kind = j.at("objective_kind").get<std::string>();
  report.final_elbo = j.at("final_elbo").at("value").get<double>();
  report.final_elbo_se = j.at("final_elbo").at("std_error").get<double>();
  report.final_eval_samples = j.at("final_elbo").at("samples").get<long>();
  report.converged = j.at("converged").get<bool>();
  report.stop_reason = j.at("stop_reason").get<std::string>();
  report.total_samples = j.at("total_samples").get<long long>();
  report.flags = j.at("flags").get<std::vector<std::string>>();
  for (const auto& rec : j.at("trace")) {
    report.trace.records.push_back(trace_record_from_json(rec));
  }
  report.trace.converged = report.converged;
  report.trace.stop_reason = report.stop_reason;
  report.trace.total_samples = report.total_samples;
  return report;
}

void RunReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << to_json().dump(2) << '\n';
}

RunReport RunReport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  json j;
  in >> j;
  return from_json(j);
}

std::string RunReport::dataset_label() const {
  if (!config.dataset.empty()) {
    // strip directories and extension
    std::string name = config.dataset;
    const auto slash = name.find_last_of("/\\");
    if (slash != std::string::npos) name = name.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return name;
  }
  if (config.model == ModelKind::hdp) {
    std::ostringstream label;
    label << "hdp-K" << config.hdp.K << "-D" << config.hdp.D << "-beta"
          << config.hdp.beta << "-data" << config.hdp.data_seed;
    return label.str();
  }
  return "unnamed";
}

std::string diagnostics_csv(const AscentTrace& trace) {
  if (trace.empty()) {
    throw std::invalid_argument("diagnostics: empty trace");
  }
  std::ostringstream out;
  out.precision(12);
  out << "t,rho,S,a_hat,variance_ratio,elbo,elbo_se,S_raw\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << ',' << rec.step_size << ',' << rec.sample_count
        << ',' << rec.a_hat << ',' << rec.variance_ratio << ',' << rec.elbo
        << ',' << rec.elbo_se << ',' << rec.samples_required_raw << '\n';
  }
  return out.str();
}

void diagnostics_export(const AscentTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write diagnostics: " + path);
  out << diagnostics_csv(trace);
}

}  // namespace ssvb::harness
