#include "ssvb/harness/runner.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "ssvb/harness/csv.hpp"

namespace ssvb::harness {

namespace {

constexpr unsigned long kEvalSeedOffset = 0x9e3779b97f4a7c15UL;

AscentOptions ascent_options(const ExperimentConfig& config) {
  AscentOptions opts;
  opts.schedule = config.schedule;
  opts.epsilon = config.epsilon;
  opts.pilot_samples = config.pilot_samples;
  opts.clamp = SampleClamp{config.min_samples, config.max_samples};
  opts.max_iterations = config.max_iterations;
  opts.max_total_samples = config.max_total_samples;
  opts.monitor_samples = config.monitor_samples;
  opts.reuse_pilot = !config.strict_pilot;
  opts.max_step = config.max_step;
  opts.convergence_window = config.convergence_window;
  opts.convergence_rel_tol = config.convergence_rel_tol;
  return opts;
}

TraceRecord single_record(double elbo, double elbo_se) {
  TraceRecord rec;
  rec.iteration = 1;
  rec.sample_count = 0;
  rec.variance_ratio = 0.0;
  rec.elbo = elbo;
  rec.elbo_se = elbo_se;
  return rec;
}

RunReport run_logistic(const ExperimentConfig& config) {
  const LogisticDataset data = ingest_csv(
      config.dataset,
      IngestOptions{config.label_column, -1, config.standardize});
  const LogisticModelSpec spec{config.prior_scale};

  RunReport report;
  report.config = config;
  report.seed = config.seed;
  report.objective_kind = "elbo-mc";

  Rng rng(config.seed);
  GaussianVariational q = GaussianVariational::isotropic(data.dim(), 0.1);

  switch (config.method) {
    case Method::taylor_cv:
    case Method::jj_cv:
    case Method::ss_no_cv: {
      const LogisticCv cv = config.method == Method::taylor_cv
                                ? LogisticCv::taylor
                                : (config.method == Method::jj_cv
                                       ? LogisticCv::jj
                                       : LogisticCv::none);
      const ObjectiveSplit split = logistic_objective(data, spec, cv);
      report.trace = run_ascent(split, q, ascent_options(config), rng);
      if (report.trace.stop_reason == "non-finite parameters") {
        throw RunError("logistic fit diverged to non-finite parameters");
      }
      const int pilot_extra = config.strict_pilot ? 0 : config.pilot_samples;
      const bool saturated =
          !report.trace.empty() &&
          std::all_of(report.trace.records.begin(),
                      report.trace.records.end(),
                      [&](const TraceRecord& rec) {
                        return rec.sample_count - pilot_extra >=
                               config.max_samples;
                      });
      if (saturated) report.flags.push_back("variance budget saturated");
      break;
    }
    case Method::laplace: {
      q = laplace_fit(data, spec);
      break;
    }
    case Method::jj_bound: {
      JJFitResult fit = jj_coordinate_vb(data, spec);
      q = fit.q;
      break;
    }
    default:
      throw ConfigError("method does not apply to the logistic model");
  }

  Rng eval_rng(config.seed ^ kEvalSeedOffset);
  const ElboEstimate final_eval =
      logistic_elbo_mc(q, data, spec, config.eval_samples, eval_rng);
  report.final_elbo = final_eval.value;
  report.final_elbo_se = final_eval.std_error;
  report.final_eval_samples = final_eval.sample_count;
  if (report.trace.empty()) {
    report.trace.records.push_back(
        single_record(final_eval.value, final_eval.std_error));
    report.trace.stop_reason = "closed-form fit";
  }
  report.converged = report.trace.converged;
  report.stop_reason = report.trace.stop_reason;
  report.total_samples = report.trace.total_samples;
  return report;
}

RunReport run_hdp(const ExperimentConfig& config) {
  const HDPSpec spec = config.hdp.spec();
  SecondLevelStats stats;
  if (!config.dataset.empty()) {
    stats.M = read_matrix_csv(config.dataset);
    stats.validate();
  } else {
    Rng data_rng(config.hdp.data_seed);
    stats = generate_synthetic(spec, data_rng).stats;
  }
  const HdpObjective objective(spec, stats);

  RunReport report;
  report.config = config;
  report.seed = config.seed;

  Rng rng(config.seed);
  const long eval_per_coordinate =
      std::max<long>(100, config.eval_samples / spec.K);

  switch (config.method) {
    case Method::hdp_stochastic: {
      HdpFitOptions opts;
      opts.schedule = config.schedule;
      opts.step.epsilon = config.epsilon;
      opts.step.pilot_samples = config.pilot_samples;
      opts.step.clamp = SampleClamp{config.min_samples, config.max_samples};
      opts.step.reuse_pilot = !config.strict_pilot;
      opts.step.full_dirichlet_score = config.hdp.full_dirichlet_score;
      opts.normalize_step = config.hdp.normalize_step;
      opts.max_iterations = config.max_iterations;
      opts.max_total_samples = config.max_total_samples;
      opts.max_step = config.max_step;
      opts.convergence_window = config.convergence_window;
      opts.convergence_rel_tol = config.convergence_rel_tol;
      opts.monitor_samples_per_coordinate =
          std::max(8, config.monitor_samples / spec.K);
      HdpFitResult fit = fit_hdp_stochastic(objective, opts, rng);
      if (fit.trace.stop_reason == "non-finite parameters") {
        throw RunError("hdp fit diverged to non-finite parameters");
      }
      report.trace = std::move(fit.trace);
      Rng eval_rng(config.seed ^ kEvalSeedOffset);
      const ElboEstimate final_eval =
          hdp_elbo_mc(fit.q, objective, eval_per_coordinate, eval_rng);
      report.objective_kind = "elbo-mc";
      report.final_elbo = final_eval.value;
      report.final_elbo_se = final_eval.std_error;
      report.final_eval_samples = final_eval.sample_count;
      break;
    }
    case Method::hdp_point: {
      const PointFitResult fit = fit_theta_point(objective);
      if (!fit.converged) {
        report.flags.push_back("point estimate: gradient tolerance not reached");
      }
      report.objective_kind = "plugin";
      report.final_elbo = fit.objective;
      report.final_elbo_se = 0.0;
      report.final_eval_samples = 0;
      report.trace.records.push_back(single_record(fit.objective, 0.0));
      report.trace.stop_reason = "point estimate";
      break;
    }
    case Method::hdp_uniform: {
      const double value = objective.uniform_theta_objective();
      report.objective_kind = "plugin";
      report.final_elbo = value;
      report.final_elbo_se = 0.0;
      report.final_eval_samples = 0;
      report.trace.records.push_back(single_record(value, 0.0));
      report.trace.stop_reason = "fixed uniform theta";
      break;
    }
    default:
      throw ConfigError("method does not apply to the hdp model");
  }
  report.converged = report.trace.converged;
  report.stop_reason = report.trace.stop_reason;
  report.total_samples = report.trace.total_samples;
  return report;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!config.seed_set) {
    throw ConfigError("run_experiment: seed is required");
  }
  try {
    return config.model == ModelKind::logistic ? run_logistic(config)
                                               : run_hdp(config);
  } catch (const ConfigError&) {
    throw;
  } catch (const NumericalError& e) {
    throw RunError(std::string("numerical failure in ") +
                   to_string(config.method) + ": " + e.what());
  }
}

TableArtifact compare_table(const std::vector<RunReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("compare_table: need >= 2 reports");
  }
  const ModelKind model = reports[0].config.model;
  for (const auto& r : reports) {
    if (r.config.model != model) {
      throw std::invalid_argument("compare_table: mismatched models");
    }
  }

  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  struct Cell {
    double sum = 0.0;
    double se_sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<std::string, std::string>, Cell> cells;
  // (dataset, seed) groups for the rank summary
  std::map<std::pair<std::string, unsigned long>,
           std::vector<std::pair<std::string, double>>>
      groups;

  for (const auto& r : reports) {
    const std::string method = to_string(r.config.method);
    const std::string dataset = r.dataset_label();
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) {
      methods.push_back(method);
    }
    if (std::find(datasets.begin(), datasets.end(), dataset) ==
        datasets.end()) {
      datasets.push_back(dataset);
    }
    Cell& cell = cells[{method, dataset}];
    cell.sum += r.final_elbo;
    cell.se_sum += r.final_elbo_se;
    cell.count += 1;
    groups[{dataset, r.seed}].push_back({method, r.final_elbo});
  }

  // Rank fractions over complete groups.
  const size_t n_methods = methods.size();
  std::map<std::string, std::vector<double>> rank_counts;
  for (const auto& m : methods) {
    rank_counts[m] = std::vector<double>(n_methods, 0.0);
  }
  int complete_groups = 0;
  for (const auto& [key, entries] : groups) {
    if (entries.size() != n_methods) continue;
    std::set<std::string> seen;
    for (const auto& e : entries) seen.insert(e.first);
    if (seen.size() != n_methods) continue;
    auto sorted = entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    for (size_t rank = 0; rank < sorted.size(); ++rank) {
      rank_counts[sorted[rank].first][rank] += 1.0;
    }
    ++complete_groups;
  }

  if (complete_groups == 0) {
    throw std::invalid_argument(
        "compare_table: mismatched datasets (no group has every method)");
  }

  std::ostringstream csv, text;
  csv.precision(10);
  text.precision(6);

  csv << "method";
  for (const auto& d : datasets) csv << ',' << d;
  csv << '\n';
  for (const auto& m : methods) {
    csv << m;
    for (const auto& d : datasets) {
      csv << ',';
      const auto it = cells.find({m, d});
      if (it != cells.end() && it->second.count > 0) {
        csv << it->second.sum / it->second.count;
      }
    }
    csv << '\n';
  }

  text << std::left << std::setw(16) << "method\\data";
  for (const auto& d : datasets) text << std::setw(18) << d;
  text << '\n';
  for (const auto& m : methods) {
    text << std::left << std::setw(16) << m;
    for (const auto& d : datasets) {
      const auto it = cells.find({m, d});
      if (it == cells.end() || it->second.count == 0) {
        text << std::setw(18) << "-";
      } else {
        std::ostringstream cell;
        cell.precision(5);
        cell << it->second.sum / it->second.count;
        if (it->second.se_sum > 0.0) {
          cell << " (" << std::setprecision(2)
               << it->second.se_sum / it->second.count << ")";
        }
        text << std::setw(18) << cell.str();
      }
    }
    text << '\n';
  }

  json summary;
  summary["methods"] = methods;
  summary["datasets"] = datasets;
  summary["complete_groups"] = complete_groups;
  if (complete_groups > 0) {
    text << "\nrank fractions over " << complete_groups << " groups\n";
    text << std::left << std::setw(16) << "method\\rank";
    for (size_t r = 0; r < n_methods; ++r) {
      text << std::setw(10) << (std::to_string(r + 1) +
                                (r == 0 ? "st" : (r == 1 ? "nd" : (r == 2 ? "rd" : "th"))));
    }
    text << '\n';
    json ranks;
    for (const auto& m : methods) {
      text << std::left << std::setw(16) << m;
      json row = json::array();
      for (size_t r = 0; r < n_methods; ++r) {
        const double frac = rank_counts[m][r] / complete_groups;
        text << std::setw(10) << frac;
        row.push_back(frac);
      }
      text << '\n';
      ranks[m] = std::move(row);
    }
    summary["rank_fractions"] = std::move(ranks);
  }

  TableArtifact artifact;
  artifact.csv = csv.str();
  artifact.text = text.str();
  artifact.summary = std::move(summary);
  return artifact;
}

std::vector<ExperimentConfig> expand_grid(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<json>>>& axes) {
  std::vector<json> configs{base.to_json()};
  for (const auto& [path, values] : axes) {
    if (values.empty()) {
      throw ConfigError("grid axis '" + path + "' has no values");
    }
    std::vector<json> next;
    for (const auto& cfg : configs) {
      for (const auto& value : values) {
        json updated = cfg;
        json* node = &updated;
        std::string rest = path;
        for (size_t dot = rest.find('.'); dot != std::string::npos;
             dot = rest.find('.')) {
          node = &(*node)[rest.substr(0, dot)];
          rest = rest.substr(dot + 1);
        }
        (*node)[rest] = value;
        next.push_back(std::move(updated));
      }
    }
    configs = std::move(next);
  }
  std::vector<ExperimentConfig> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) {
    out.push_back(ExperimentConfig::from_json(cfg));
  }
  return out;
}

}  // namespace ssvb::harness
