// Experiment CLI: fit one configuration, run a config grid, build comparison
// tables, export per-iteration diagnostics, and synthesize HDP data.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ssvb/harness/csv.hpp"
#include "ssvb/harness/runner.hpp"

namespace hn = ssvb::harness;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

// SSVB_OUTPUT_DIR redirects relative output paths.
fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  const char* dir = std::getenv("SSVB_OUTPUT_DIR");
  if (dir != nullptr && *dir != '\0' && p.is_relative()) {
    fs::path base(dir);
    fs::create_directories(base);
    return base / p;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

struct FitFlags {
  std::string config_path;
  std::optional<std::string> model, method, dataset, label_column;
  std::optional<bool> standardize, strict_pilot;
  std::optional<double> epsilon, rho0, w, eta, prior_scale;
  std::optional<int> max_iterations, pilot_samples, min_samples, max_samples,
      monitor_samples;
  std::optional<long long> max_total_samples;
  std::optional<long> eval_samples;
  std::optional<unsigned long> seed;
  std::optional<int> hdp_K, hdp_D;
  std::optional<double> hdp_alpha, hdp_beta, hdp_kappa1, hdp_kappa2;
  std::optional<unsigned long> hdp_data_seed;
  std::optional<bool> hdp_full_score;
};

hn::json base_config_json(const std::string& config_path) {
  if (config_path.empty()) {
    return hn::ExperimentConfig{}.to_json();
  }
  std::ifstream in(config_path);
  if (!in) throw hn::ConfigError("cannot open config file: " + config_path);
  hn::json j;
  try {
    in >> j;
  } catch (const hn::json::exception& e) {
    throw hn::ConfigError("invalid JSON in " + config_path + ": " + e.what());
  }
  return j;
}

hn::ExperimentConfig assemble_config(const FitFlags& flags) {
  hn::json j = base_config_json(flags.config_path);
  auto set = [&j](const char* key, const auto& opt) {
    if (opt.has_value()) j[key] = *opt;
  };
  set("model", flags.model);
  set("method", flags.method);
  set("dataset", flags.dataset);
  set("label_column", flags.label_column);
  set("standardize", flags.standardize);
  set("epsilon", flags.epsilon);
  if (flags.rho0 || flags.w || flags.eta) {
    hn::json sched = j.contains("schedule") ? j["schedule"] : hn::json::object();
    if (flags.rho0) sched["rho0"] = *flags.rho0;
    if (flags.w) sched["w"] = *flags.w;
    if (flags.eta) sched["eta"] = *flags.eta;
    j["schedule"] = sched;
  }
  if (flags.max_iterations || flags.max_total_samples) {
    hn::json budget = j.contains("budget") ? j["budget"] : hn::json::object();
    if (flags.max_iterations) budget["max_iterations"] = *flags.max_iterations;
    if (flags.max_total_samples) {
      budget["max_total_samples"] = *flags.max_total_samples;
    }
    j["budget"] = budget;
  }
  set("pilot_samples", flags.pilot_samples);
  set("min_samples", flags.min_samples);
  set("max_samples", flags.max_samples);
  set("eval_samples", flags.eval_samples);
  set("monitor_samples", flags.monitor_samples);
  set("strict_pilot", flags.strict_pilot);
  set("seed", flags.seed);
  set("prior_scale", flags.prior_scale);
  if (flags.hdp_K || flags.hdp_D || flags.hdp_alpha || flags.hdp_beta ||
      flags.hdp_kappa1 || flags.hdp_kappa2 || flags.hdp_data_seed ||
      flags.hdp_full_score) {
    hn::json hdp = j.contains("hdp") ? j["hdp"] : hn::json::object();
    if (flags.hdp_K) hdp["K"] = *flags.hdp_K;
    if (flags.hdp_D) hdp["D"] = *flags.hdp_D;
    if (flags.hdp_alpha) hdp["alpha"] = *flags.hdp_alpha;
    if (flags.hdp_beta) hdp["beta"] = *flags.hdp_beta;
    if (flags.hdp_kappa1) hdp["kappa1"] = *flags.hdp_kappa1;
    if (flags.hdp_kappa2) hdp["kappa2"] = *flags.hdp_kappa2;
    if (flags.hdp_data_seed) hdp["data_seed"] = *flags.hdp_data_seed;
    if (flags.hdp_full_score) {
      hdp["full_dirichlet_score"] = *flags.hdp_full_score;
    }
    j["hdp"] = hdp;
  }
  return hn::ExperimentConfig::from_json(j);
}

void add_fit_flags(CLI::App* cmd, FitFlags& flags, bool require_seed) {
  cmd->add_option("--config", flags.config_path, "Base config JSON file");
  cmd->add_option("--model", flags.model, "logistic | hdp");
  cmd->add_option("--method", flags.method,
                  "taylor-cv | jj-cv | jj-bound | laplace | ss-no-cv | "
                  "hdp-stochastic | hdp-point | hdp-uniform");
  cmd->add_option("--dataset", flags.dataset, "Dataset CSV path");
  cmd->add_option("--label-column", flags.label_column, "Label column name");
  cmd->add_option("--standardize", flags.standardize,
                  "Standardize feature columns");
  cmd->add_option("--epsilon", flags.epsilon, "Variance reduction parameter");
  cmd->add_option("--rho0", flags.rho0, "Step scale");
  cmd->add_option("--w", flags.w, "Step delay");
  cmd->add_option("--eta", flags.eta, "Step decay exponent, in (0.5, 1]");
  cmd->add_option("--max-iterations", flags.max_iterations, "Iteration budget");
  cmd->add_option("--max-total-samples", flags.max_total_samples,
                  "Total gradient-sample budget (-1 = unlimited)");
  cmd->add_option("--pilot-samples", flags.pilot_samples, "Pilot draws per iteration");
  cmd->add_option("--min-samples", flags.min_samples, "Per-iteration sample floor");
  cmd->add_option("--max-samples", flags.max_samples, "Per-iteration sample cap");
  cmd->add_option("--eval-samples", flags.eval_samples,
                  "Samples for the final objective evaluation");
  cmd->add_option("--monitor-samples", flags.monitor_samples,
                  "Samples for the per-iteration objective estimate");
  cmd->add_option("--strict-pilot", flags.strict_pilot,
                  "Exclude pilot draws from the main estimate");
  auto* seed = cmd->add_option("--seed", flags.seed, "RNG seed");
  if (require_seed) seed->required();
  cmd->add_option("--prior-scale", flags.prior_scale,
                  "Logistic prior variance scale c");
  cmd->add_option("--hdp-K", flags.hdp_K, "HDP truncation level");
  cmd->add_option("--hdp-D", flags.hdp_D, "HDP group count");
  cmd->add_option("--hdp-alpha", flags.hdp_alpha, "HDP top-level concentration");
  cmd->add_option("--hdp-beta", flags.hdp_beta, "HDP second-level concentration");
  cmd->add_option("--hdp-kappa1", flags.hdp_kappa1, "CV switch-down point");
  cmd->add_option("--hdp-kappa2", flags.hdp_kappa2, "CV switch-up point");
  cmd->add_option("--hdp-data-seed", flags.hdp_data_seed,
                  "Seed for the synthetic hierarchy");
  cmd->add_option("--hdp-full-score", flags.hdp_full_score,
                  "Use the full Dirichlet score instead of the beta marginal");
}

std::pair<std::string, std::vector<hn::json>> parse_axis(
    const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
    throw hn::ConfigError("grid axis must look like key=v1,v2,... : " + spec);
  }
  const std::string key = spec.substr(0, eq);
  std::vector<hn::json> values;
  std::string rest = spec.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string token =
        rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                    : comma - pos);
    if (token.empty()) throw hn::ConfigError("empty value in axis " + spec);
    try {
      values.push_back(hn::json::parse(token));
    } catch (const hn::json::exception&) {
      values.push_back(token);  // plain string value
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return {key, values};
}

int run_main(int argc, char** argv) {
  CLI::App app{"stochastic-search variational Bayes experiment runner"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "OpenMP thread count (0 = library default)");

  // fit
  auto* fit = app.add_subcommand("fit", "Run one configuration");
  FitFlags fit_flags;
  std::string fit_out = "report.json";
  add_fit_flags(fit, fit_flags, /*require_seed=*/true);
  fit->add_option("--out", fit_out, "Report JSON output path");

  // grid
  auto* grid = app.add_subcommand("grid", "Run a config template over a grid");
  FitFlags grid_flags;
  std::vector<std::string> grid_axes;
  std::string grid_out_dir = "grid-out";
  std::string grid_table;
  add_fit_flags(grid, grid_flags, /*require_seed=*/true);
  grid->add_option("--vary", grid_axes,
                   "Axis spec key=v1,v2,... (repeatable; dotted keys allowed)");
  grid->add_option("--out-dir", grid_out_dir, "Directory for report JSONs");
  grid->add_option("--table", grid_table,
                   "Also write a comparison table to this CSV path");

  // table
  auto* table = app.add_subcommand("table", "Comparison table from reports");
  std::vector<std::string> table_reports;
  std::string table_out;
  table->add_option("reports", table_reports, "Report JSON files")->required();
  table->add_option("--out", table_out, "CSV output path (text goes to stdout)");

  // diag
  auto* diag = app.add_subcommand("diag", "Per-iteration diagnostic series");
  std::string diag_report;
  std::string diag_out;
  diag->add_option("report", diag_report, "Report JSON file")->required();
  diag->add_option("--out", diag_out, "CSV output path (default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize HDP second-level stats");
  int synth_K = 20, synth_D = 100;
  double synth_alpha = 1.0, synth_beta = 1.0;
  unsigned long synth_seed = 1;
  std::string synth_out = "hdp_stats.csv";
  synth->add_option("--K", synth_K, "Truncation level")->required();
  synth->add_option("--D", synth_D, "Group count")->required();
  synth->add_option("--alpha", synth_alpha, "Top-level concentration");
  synth->add_option("--beta", synth_beta, "Second-level concentration");
  synth->add_option("--seed", synth_seed, "RNG seed")->required();
  synth->add_option("--out", synth_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  if (*fit) {
    const hn::ExperimentConfig config = assemble_config(fit_flags);
    const hn::RunReport report = hn::run_experiment(config);
    const fs::path out = resolve_output(fit_out);
    report.save(out.string());
    std::cout << "final " << report.objective_kind << ": " << report.final_elbo
              << " (se " << report.final_elbo_se << "), iterations "
              << report.trace.records.size() << ", stop: "
              << report.stop_reason << "\nreport: " << out.string() << '\n';
    return 0;
  }

  if (*grid) {
    const hn::ExperimentConfig base = assemble_config(grid_flags);
    std::vector<std::pair<std::string, std::vector<hn::json>>> axes;
    for (const auto& spec : grid_axes) axes.push_back(parse_axis(spec));
    const auto configs = hn::expand_grid(base, axes);
    const fs::path out_dir = resolve_output(grid_out_dir);
    fs::create_directories(out_dir);
    std::vector<hn::RunReport> reports;
    for (size_t i = 0; i < configs.size(); ++i) {
      hn::RunReport report = hn::run_experiment(configs[i]);
      const fs::path path =
          out_dir / ("report_" + std::to_string(i) + ".json");
      report.save(path.string());
      std::cout << path.string() << ": " << to_string(configs[i].method)
                << " seed " << configs[i].seed << " -> " << report.final_elbo
                << '\n';
      reports.push_back(std::move(report));
    }
    if (!grid_table.empty() && reports.size() >= 2) {
      const hn::TableArtifact artifact = hn::compare_table(reports);
      const fs::path path = resolve_output(grid_table);
      std::ofstream out(path);
      out << artifact.csv;
      std::cout << artifact.text;
    }
    return 0;
  }

  if (*table) {
    std::vector<hn::RunReport> reports;
    for (const auto& path : table_reports) {
      reports.push_back(hn::RunReport::load(path));
    }
    const hn::TableArtifact artifact = hn::compare_table(reports);
    std::cout << artifact.text;
    if (!table_out.empty()) {
      std::ofstream out(resolve_output(table_out));
      out << artifact.csv;
    }
    return 0;
  }

  if (*diag) {
    const hn::RunReport report = hn::RunReport::load(diag_report);
    const std::string csv = hn::diagnostics_csv(report.trace);
    if (diag_out.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(resolve_output(diag_out));
      out << csv;
    }
    return 0;
  }

  if (*synth) {
    ssvb::HDPSpec spec;
    spec.K = synth_K;
    spec.D = synth_D;
    spec.alpha = synth_alpha;
    spec.beta = synth_beta;
    ssvb::Rng rng(synth_seed);
    const ssvb::SyntheticHierarchy hier = ssvb::generate_synthetic(spec, rng);
    hn::write_csv(resolve_output(synth_out).string(), {}, hier.stats.M);
    std::cout << "wrote " << spec.D << "x" << spec.K << " stats to "
              << synth_out << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const hn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const hn::RunError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const ssvb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
