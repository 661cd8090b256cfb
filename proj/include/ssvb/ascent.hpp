#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "ssvb/objective.hpp"
#include "ssvb/schedule.hpp"

namespace ssvb {

struct AscentOptions {
  StepSchedule schedule;
  double epsilon = 0.1;
  int pilot_samples = 24;
  SampleClamp clamp;
  int max_iterations = 2000;
  // < 0 means unlimited; counts gradient draws (pilot + main), not monitor.
  long long max_total_samples = -1;
  int monitor_samples = 1024;
  int convergence_window = 20;
  double convergence_rel_tol = 1e-4;
  // Pilot draws are valid i.i.d. draws from the current q, so by default
  // they join the main estimate; strict mode uses only the fresh draws.
  bool reuse_pilot = true;
  // Infinity-norm cap on the applied step rho * grad; keeps noisy early
  // iterations (and the deliberately under-sampled raw estimator) from
  // driving psi out of double range. <= 0 disables.
  double max_step = 10.0;
  // Store a psi snapshot on every n-th record (0 = never).
  int snapshot_every = 0;
};

struct TraceRecord {
  int iteration = 0;
  double step_size = 0.0;
  int sample_count = 0;       // draws behind the gradient estimate
  double a_hat = 0.0;
  double variance_ratio = 1.0;    // 1 - alpha^2/(beta gamma), pilot estimate
  double elbo = 0.0;
  double elbo_se = 0.0;
  double samples_required_raw = 0.0;  // gamma / (eps K), counterfactual
  std::optional<Vec> psi_snapshot;
};

struct AscentTrace {
  std::vector<TraceRecord> records;
  long long total_samples = 0;
  bool converged = false;
  std::string stop_reason;

  bool empty() const { return records.empty(); }
};

// Sliding-window moving average convergence test: converged when the window
// mean moves by less than rel_tol (relative to its magnitude) between
// consecutive iterations after the window has filled.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(int window, double rel_tol)
      : window_(window), rel_tol_(rel_tol) {}

  bool update(double value);

 private:
  int window_;
  double rel_tol_;
  std::deque<double> values_;
  bool has_prev_ = false;
  double prev_mean_ = 0.0;
};

// Algorithm-1 stochastic ascent: per iteration draw a pilot, estimate the
// scale a^ and the sample count S, draw S fresh samples, form the corrected
// gradient, and step psi along grad h + zeta with the Robbins-Monro step.
// q is updated in place; the trace gets one record per completed iteration.
AscentTrace run_ascent(const ObjectiveSplit& split, VariationalFamily& q,
                       const AscentOptions& options, Rng& rng);

std::vector<Vec> draw_samples(const VariationalFamily& q, long count, Rng& rng);

}  // namespace ssvb
