#include "ssvb/ascent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssvb {

void StepSchedule::validate() const {
  if (!(rho0 > 0.0)) throw std::invalid_argument("StepSchedule: rho0 must be > 0");
  if (!(w >= 0.0)) throw std::invalid_argument("StepSchedule: w must be >= 0");
  if (!(eta > 0.5) || !(eta <= 1.0)) {
    throw std::invalid_argument("StepSchedule: eta must be in (0.5, 1]");
  }
}

double StepSchedule::step_size(int t) const {
  if (t < 1) throw std::invalid_argument("StepSchedule: t must be >= 1");
  return rho0 * std::pow(w + static_cast<double>(t), -eta);
}

std::vector<Vec> draw_samples(const VariationalFamily& q, long count,
                              Rng& rng) {
  std::vector<Vec> samples;
  samples.reserve(static_cast<size_t>(count));
  for (long s = 0; s < count; ++s) samples.push_back(q.sample(rng));
  return samples;
}

Vec cv_gradient(const ObjectiveSplit& split, const VariationalFamily& q,
                double a_hat, const std::vector<Vec>& samples) {
  if (!split.has_cv()) {
    return score_gradient_raw(split.f, q, samples);
  }
  const ControlVariate cv = split.make_cv(q);
  const SampleBatch batch = evaluate_batch(split.f, &cv.g, q, samples);
  return cv_gradient(batch, a_hat, cv.expected_grad);
}

ElboEstimate mc_elbo(const ObjectiveSplit& split, const VariationalFamily& q,
                     long sample_count, Rng& rng) {
  if (sample_count < 2) {
    throw std::invalid_argument("mc_elbo: need >= 2 samples");
  }
  const std::vector<Vec> samples = draw_samples(q, sample_count, rng);
  const Vec f_vals = evaluate_f(split.f, samples);
  const double mean = f_vals.mean();
  const double var =
      (f_vals.array() - mean).square().sum() / static_cast<double>(sample_count - 1);
  ElboEstimate est;
  est.value = split.h(q) + mean;
  est.std_error = std::sqrt(var / static_cast<double>(sample_count));
  est.sample_count = sample_count;
  return est;
}

bool ConvergenceMonitor::update(double value) {
  values_.push_back(value);
  if (static_cast<int>(values_.size()) > window_) values_.pop_front();
  if (static_cast<int>(values_.size()) < window_) return false;
  double mean = 0.0;
  for (double v : values_) mean += v;
  mean /= static_cast<double>(values_.size());
  bool converged = false;
  if (has_prev_) {
    const double denom = std::abs(mean) + 1e-12;
    converged = std::abs(mean - prev_mean_) / denom < rel_tol_;
  }
  has_prev_ = true;
  prev_mean_ = mean;
  return converged;
}

namespace {

// Chunked accumulation of scores^T (f - a g) so large S never materializes a
// full S x K score matrix. Chunk boundaries are fixed and the reduction is
// sequential, so the sum is independent of thread count.
constexpr long kEvalChunk = 8192;

struct MainEstimate {
  Vec weighted_score_sum;  // sum_s (f_s - a g_s) * score_s
  long count = 0;
};

MainEstimate accumulate_main(const ObjectiveSplit& split,
                             const ControlVariate* cv,
                             const VariationalFamily& q, double a_hat,
                             const std::vector<Vec>& samples) {
  MainEstimate acc;
  acc.weighted_score_sum = Vec::Zero(q.psi_dim());
  const long S = static_cast<long>(samples.size());
  for (long begin = 0; begin < S; begin += kEvalChunk) {
    const long end = std::min(begin + kEvalChunk, S);
    const std::vector<Vec> chunk(samples.begin() + begin,
                                 samples.begin() + end);
    const SampleBatch batch = evaluate_batch(
        split.f, cv != nullptr ? &cv->g : nullptr, q, chunk);
    if (cv != nullptr && a_hat != 0.0) {
      acc.weighted_score_sum +=
          batch.scores.transpose() * (batch.f - a_hat * batch.g);
    } else {
      acc.weighted_score_sum += batch.scores.transpose() * batch.f;
    }
    acc.count += batch.size();
  }
  return acc;
}

}  // namespace

AscentTrace run_ascent(const ObjectiveSplit& split, VariationalFamily& q,
                       const AscentOptions& options, Rng& rng) {
  options.schedule.validate();
  if (options.pilot_samples < 2) {
    throw std::invalid_argument("run_ascent: need >= 2 pilot samples");
  }
  AscentTrace trace;
  ConvergenceMonitor monitor(options.convergence_window,
                             options.convergence_rel_tol);
  const int K = q.psi_dim();

  for (int t = 1; t <= options.max_iterations; ++t) {
    const double rho = options.schedule.step_size(t);

    // Pilot pass: statistics, scale and sample count for this iteration.
    ControlVariate cv;
    bool use_cv = split.has_cv();
    if (use_cv) cv = split.make_cv(q);
    const std::vector<Vec> pilot =
        draw_samples(q, options.pilot_samples, rng);
    const SampleBatch pilot_batch =
        evaluate_batch(split.f, use_cv ? &cv.g : nullptr, q, pilot);
    const SampleStats stats = pilot_stats(pilot_batch);

    double a_hat = 0.0;
    if (use_cv) {
      if (cv.fixed_scale.has_value()) {
        a_hat = *cv.fixed_scale;
      } else if (stats.cv_informative()) {
        a_hat = optimal_scale(stats);
      } else {
        use_cv = false;  // degenerate control variate; fall back to raw
      }
    }

    const int fresh = required_samples(stats, options.epsilon, K, options.clamp);
    std::vector<Vec> main = draw_samples(q, fresh, rng);
    if (options.reuse_pilot) {
      main.insert(main.end(), pilot.begin(), pilot.end());
    }

    MainEstimate est =
        accumulate_main(split, use_cv ? &cv : nullptr, q, a_hat, main);
    Vec grad = est.weighted_score_sum / static_cast<double>(est.count);
    if (use_cv && a_hat != 0.0) grad += a_hat * cv.expected_grad;
    grad += split.h_grad(q);

    double applied_rho = rho;
    if (options.max_step > 0.0) {
      const double norm = rho * grad.lpNorm<Eigen::Infinity>();
      if (norm > options.max_step) applied_rho = rho * options.max_step / norm;
    }
    q.apply_step(grad, applied_rho);
    trace.total_samples += options.pilot_samples + fresh;

    TraceRecord rec;
    rec.iteration = t;
    rec.step_size = rho;
    rec.sample_count = static_cast<int>(est.count);
    rec.a_hat = a_hat;
    rec.variance_ratio =
        (use_cv && stats.beta > 0.0 && stats.gamma > 0.0)
            ? 1.0 - stats.alpha * stats.alpha / (stats.beta * stats.gamma)
            : 1.0;
    rec.samples_required_raw =
        required_samples_raw(stats, options.epsilon, K);

    if (!q.psi().allFinite()) {
      rec.elbo = std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(std::move(rec));
      trace.stop_reason = "non-finite parameters";
      return trace;
    }

    const ElboEstimate elbo = mc_elbo(split, q, options.monitor_samples, rng);
    rec.elbo = elbo.value;
    rec.elbo_se = elbo.std_error;
    if (options.snapshot_every > 0 && t % options.snapshot_every == 0) {
      rec.psi_snapshot = q.psi();
    }
    trace.records.push_back(std::move(rec));

    if (monitor.update(elbo.value)) {
      trace.converged = true;
      trace.stop_reason = "converged";
      return trace;
    }
    if (options.max_total_samples >= 0 &&
        trace.total_samples >= options.max_total_samples) {
      trace.stop_reason = "sample budget exhausted";
      return trace;
    }
  }
  trace.stop_reason = options.max_iterations == 0 ? "zero iteration budget"
                                                  : "max iterations";
  return trace;
}

}  // namespace ssvb
