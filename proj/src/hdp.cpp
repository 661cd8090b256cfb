#include "ssvb/hdp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssvb/special_functions.hpp"

namespace ssvb {

void HDPSpec::validate() const {
  if (K < 2) throw std::invalid_argument("HDPSpec: K must be >= 2");
  if (D < 1) throw std::invalid_argument("HDPSpec: D must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("HDPSpec: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("HDPSpec: beta must be > 0");
  if (!(kappa1 > 0.0) || !(kappa1 <= kappa2)) {
    throw std::invalid_argument("HDPSpec: need 0 < kappa1 <= kappa2");
  }
}

void SecondLevelStats::validate() const {
  if (M.rows() < 1 || M.cols() < 2) {
    throw std::invalid_argument("SecondLevelStats: need D >= 1, K >= 2");
  }
  if (!M.allFinite() || (M.array() > 0.0).any()) {
    throw std::invalid_argument("SecondLevelStats: entries must be finite and <= 0");
  }
  for (Eigen::Index d = 0; d < M.rows(); ++d) {
    if (M.row(d).array().exp().sum() > 1.0 + 1e-6) {
      throw std::invalid_argument(
          "SecondLevelStats: row inconsistent with a probability vector");
    }
  }
}

SyntheticHierarchy generate_synthetic(const HDPSpec& spec, Rng& rng) {
  spec.validate();
  SyntheticHierarchy out;
  const DirichletVariational top =
      DirichletVariational::symmetric(spec.K, spec.alpha / spec.K);
  out.theta_star = top.sample(rng);

  out.pi.resize(spec.D, spec.K);
  for (int d = 0; d < spec.D; ++d) {
    Vec g(spec.K);
    for (int k = 0; k < spec.K; ++k) {
      g[k] = sample_gamma(spec.beta * out.theta_star[k], rng);
    }
    Vec pi_d = g / g.sum();
    for (int k = 0; k < spec.K; ++k) {
      if (pi_d[k] < DirichletVariational::kSimplexClamp) {
        pi_d[k] = DirichletVariational::kSimplexClamp;
      }
    }
    out.pi.row(d) = pi_d.transpose();
  }
  out.stats.M = out.pi.array().log();
  out.stats.validate();
  return out;
}

HdpCvMode select_cv_mode(double beta_theta_bar,
                         std::optional<HdpCvMode> previous,
                         const HDPSpec& spec) {
  if (previous.has_value() && *previous == HdpCvMode::taylor_cv) {
    return beta_theta_bar < spec.kappa1 ? HdpCvMode::log_cv
                                        : HdpCvMode::taylor_cv;
  }
  return beta_theta_bar <= spec.kappa2 ? HdpCvMode::log_cv
                                       : HdpCvMode::taylor_cv;
}

HdpObjective::HdpObjective(HDPSpec spec, SecondLevelStats stats)
    : spec_(std::move(spec)), stats_(std::move(stats)) {
  spec_.validate();
  stats_.validate();
  if (stats_.M.rows() != spec_.D || stats_.M.cols() != spec_.K) {
    throw std::invalid_argument("HdpObjective: stats shape mismatch");
  }
  T_ = stats_.column_sums();
}

double HdpObjective::f_k(double theta_k) const {
  return -static_cast<double>(spec_.D) * ln_gamma(spec_.beta * theta_k);
}

double HdpObjective::tractable_term(const DirichletVariational& q) const {
  const Vec mean = q.mean();
  const Vec elog = q.expected_log();
  const double a0 = spec_.alpha / spec_.K;
  double out = spec_.beta * mean.dot(T_);
  // E[ln p(theta)] for the symmetric Dirichlet prior.
  out += ln_gamma(spec_.alpha) - spec_.K * ln_gamma(a0);
  out += (a0 - 1.0) * elog.sum();
  out += q.entropy();
  return out;
}

Vec HdpObjective::tractable_grad_c(const DirichletVariational& q) const {
  const int K = spec_.K;
  const Vec& c = q.concentration();
  const double c0 = c.sum();
  const Vec mean = c / c0;
  const double a0 = spec_.alpha / K;
  const double tri_c0 = trigamma(c0);

  // d/dc_j of sum_k beta (c_k/c0) T_k
  const double mean_T = mean.dot(T_);
  Vec grad = (spec_.beta / c0) * (T_.array() - mean_T).matrix();

  // d/dc_j of E[ln p] = (a0-1) trigamma(c_j) - (alpha-K) trigamma(c0)
  for (int j = 0; j < K; ++j) {
    grad[j] += (a0 - 1.0) * trigamma(c[j]);
  }
  grad.array() -= (spec_.alpha - K) * tri_c0;

  // d/dc_j of H[q] = (c0-K) trigamma(c0) - (c_j-1) trigamma(c_j)
  for (int j = 0; j < K; ++j) {
    grad[j] += (c0 - K) * tri_c0 - (c[j] - 1.0) * trigamma(c[j]);
  }
  return grad;
}

HdpCoordinateCv HdpObjective::coordinate_cv(const DirichletVariational& q,
                                            int k, HdpCvMode mode) const {
  const int K = spec_.K;
  const double D = spec_.D;
  const double beta = spec_.beta;
  const Vec& c = q.concentration();
  const double c0 = c.sum();

  HdpCoordinateCv cv;
  cv.mode = mode;
  if (mode == HdpCvMode::log_cv) {
    // g_k = D ln(beta theta_k); with a = 1 the residual is
    // -D ln Gamma(beta theta_k + 1), finite as theta_k -> 0 (the whole point).
    cv.g = [D, beta](double t) { return D * std::log(beta * t); };
    cv.expected_value = D * (std::log(beta) + digamma(c[k]) - digamma(c0));
    Vec grad = Vec::Constant(K, -D * trigamma(c0));
    grad[k] += D * trigamma(c[k]);
    cv.expected_grad_c = std::move(grad);
    cv.fixed_scale = 1.0;
  } else {
    // First-order expansion of f_k about the current mean; an upper bound
    // since f_k is concave. The expansion point is frozen, so the gradient
    // of the expectation keeps the linear term's dependence on E[theta_k].
    const double tb = c[k] / c0;
    const double f_at = -D * ln_gamma(beta * tb);
    const double slope = -D * beta * digamma(beta * tb);
    cv.g = [f_at, slope, tb](double t) { return f_at + slope * (t - tb); };
    cv.expected_value = f_at;  // E[theta_k - tb] = 0 at the current q
    Vec grad(K);
    for (int j = 0; j < K; ++j) {
      const double dmean = (j == k ? 1.0 / c0 : 0.0) - c[k] / (c0 * c0);
      grad[j] = slope * dmean;
    }
    cv.expected_grad_c = std::move(grad);
  }
  return cv;
}

HdpCoordinateCv HdpObjective::coordinate_cv(
    const DirichletVariational& q, int k,
    std::optional<HdpCvMode> previous) const {
  const Vec mean = q.mean();
  const HdpCvMode mode =
      select_cv_mode(spec_.beta * mean[k], previous, spec_);
  return coordinate_cv(q, k, mode);
}

double HdpObjective::plugin_objective(const Vec& theta) const {
  if (theta.size() != spec_.K) {
    throw std::invalid_argument("plugin_objective: theta size mismatch");
  }
  const double a0 = spec_.alpha / spec_.K;
  double out = ln_gamma(spec_.alpha) - spec_.K * ln_gamma(a0);
  for (int k = 0; k < spec_.K; ++k) {
    if (!(theta[k] > 0.0)) {
      throw std::domain_error("plugin_objective: theta must be interior");
    }
    out += spec_.beta * theta[k] * T_[k];
    out += f_k(theta[k]);
    out += (a0 - 1.0) * std::log(theta[k]);
  }
  return out;
}

double HdpObjective::uniform_theta_objective() const {
  return plugin_objective(Vec::Constant(spec_.K, 1.0 / spec_.K));
}

namespace {

// Assembles a per-coordinate sample batch: f_k and g_k at scalar draws plus
// the K-dimensional score in plain c coordinates.
SampleBatch coordinate_batch(const HdpObjective& objective,
                             const HdpCoordinateCv& cv, const Vec& c, int k,
                             bool full_dirichlet,
                             const std::vector<Vec>& draws) {
  const long S = static_cast<long>(draws.size());
  SampleBatch batch;
  batch.f.resize(S);
  batch.g.resize(S);
  batch.scores.resize(S, c.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long s = 0; s < S; ++s) {
    const double theta_k = full_dirichlet ? draws[s][k] : draws[s][0];
    batch.f[s] = objective.f_k(theta_k);
    batch.g[s] = cv.g(theta_k);
    if (full_dirichlet) {
      batch.scores.row(s) = dirichlet_score_c(c, draws[s]).transpose();
    } else {
      batch.scores.row(s) =
          beta_marginal_score(c, k, theta_k).transpose();
    }
  }
  check_batch_finite(batch);
  return batch;
}

std::vector<Vec> draw_coordinate_samples(const DirichletVariational& q,
                                         const BetaMarginal& marginal,
                                         bool full_dirichlet, long count,
                                         Rng& rng) {
  std::vector<Vec> draws;
  draws.reserve(static_cast<size_t>(count));
  for (long s = 0; s < count; ++s) {
    if (full_dirichlet) {
      draws.push_back(q.sample(rng));
    } else {
      Vec one(1);
      one[0] = marginal.sample(rng);
      draws.push_back(std::move(one));
    }
  }
  return draws;
}

}  // namespace

HdpStepResult hdp_gradient_step(
    const DirichletVariational& q, const HdpObjective& objective,
    const HdpStepOptions& options,
    std::vector<std::optional<HdpCvMode>>& cv_state, Rng& rng) {
  const int K = q.theta_dim();
  if (static_cast<int>(cv_state.size()) != K) {
    cv_state.assign(K, std::nullopt);
  }
  const Vec& c = q.concentration();

  HdpStepResult result;
  result.sample_count.resize(K);
  result.a_hat.resize(K);
  result.variance_ratio.resize(K);
  result.samples_required_raw.resize(K);
  result.mode.resize(K);

  Vec grad_c = objective.tractable_grad_c(q);

  for (int k = 0; k < K; ++k) {
    const HdpCoordinateCv cv = objective.coordinate_cv(q, k, cv_state[k]);
    cv_state[k] = cv.mode;
    result.mode[k] = cv.mode;

    const BetaMarginal marginal(q, k);
    const std::vector<Vec> pilot =
        draw_coordinate_samples(q, marginal, options.full_dirichlet_score,
                                options.pilot_samples, rng);
    const SampleBatch pilot_batch = coordinate_batch(
        objective, cv, c, k, options.full_dirichlet_score, pilot);
    const SampleStats stats = pilot_stats(pilot_batch);

    double a_hat;
    int fresh;
    if (cv.fixed_scale.has_value()) {
      // With the scale pinned, the incurred variance is the residual at
      // that scale, not the optimal-scale one.
      a_hat = *cv.fixed_scale;
      fresh = required_samples_at_scale(stats, a_hat, options.epsilon, K,
                                        options.clamp);
    } else {
      a_hat = stats.cv_informative() ? optimal_scale(stats) : 0.0;
      fresh = required_samples(stats, options.epsilon, K, options.clamp);
    }
    std::vector<Vec> main =
        draw_coordinate_samples(q, marginal, options.full_dirichlet_score,
                                fresh, rng);
    if (options.reuse_pilot) {
      main.insert(main.end(), pilot.begin(), pilot.end());
    }
    const SampleBatch batch = coordinate_batch(
        objective, cv, c, k, options.full_dirichlet_score, main);
    grad_c += cv_gradient(batch, a_hat, cv.expected_grad_c);

    result.sample_count[k] = static_cast<int>(batch.size());
    result.a_hat[k] = a_hat;
    result.variance_ratio[k] =
        (stats.beta > 0.0 && stats.gamma > 0.0)
            ? 1.0 - stats.alpha * stats.alpha / (stats.beta * stats.gamma)
            : 1.0;
    result.samples_required_raw[k] =
        required_samples_raw(stats, options.epsilon, K);
    result.gradient_samples += options.pilot_samples + fresh;
  }

  // Log-space chain rule: d/d ln c_k = c_k d/d c_k.
  result.grad_psi = c.array() * grad_c.array();
  return result;
}

ElboEstimate hdp_elbo_mc(const DirichletVariational& q,
                         const HdpObjective& objective,
                         long samples_per_coordinate, Rng& rng) {
  if (samples_per_coordinate < 2) {
    throw std::invalid_argument("hdp_elbo_mc: need >= 2 samples");
  }
  const int K = q.theta_dim();
  const double D = objective.spec().D;
  const double beta = objective.spec().beta;
  const Vec elog = q.expected_log();

  double value = objective.tractable_term(q);
  double var_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const BetaMarginal marginal(q, k);
    Vec vals(samples_per_coordinate);
    for (long s = 0; s < samples_per_coordinate; ++s) {
      vals[s] = ln_gamma(beta * marginal.sample(rng) + 1.0);
    }
    const double mean = vals.mean();
    const double var = (vals.array() - mean).square().sum() /
                       static_cast<double>(samples_per_coordinate - 1);
    // E[ln Gamma(beta theta_k)] = E[ln Gamma(beta theta_k + 1)]
    //                             - ln beta - E[ln theta_k]
    const double expected_lgamma = mean - std::log(beta) - elog[k];
    value -= D * expected_lgamma;
    var_sum += D * D * var / static_cast<double>(samples_per_coordinate);
  }
  ElboEstimate est;
  est.value = value;
  est.std_error = std::sqrt(var_sum);
  est.sample_count = samples_per_coordinate * K;
  return est;
}

HdpFitResult fit_hdp_stochastic(const HdpObjective& objective,
                                const HdpFitOptions& options, Rng& rng) {
  options.schedule.validate();
  const int K = objective.spec().K;
  DirichletVariational q = DirichletVariational::symmetric(
      K, std::max(objective.spec().alpha / K,
                  DirichletVariational::kConcentrationFloor));
  std::vector<std::optional<HdpCvMode>> cv_state(K, std::nullopt);

  AscentTrace trace;
  ConvergenceMonitor monitor(options.convergence_window,
                             options.convergence_rel_tol);

  for (int t = 1; t <= options.max_iterations; ++t) {
    HdpStepResult step = hdp_gradient_step(q, objective, options.step,
                                           cv_state, rng);
    const double rho = options.schedule.step_size(t);
    const double grad_norm = step.grad_psi.lpNorm<Eigen::Infinity>();
    double applied_rho = rho;
    if (options.normalize_step && grad_norm > 0.0) {
      applied_rho = rho / grad_norm;
    }
    if (options.max_step > 0.0 && applied_rho * grad_norm > options.max_step) {
      applied_rho = options.max_step / grad_norm;
    }
    q.apply_step(step.grad_psi, applied_rho);
    trace.total_samples += step.gradient_samples;

    TraceRecord rec;
    rec.iteration = t;
    rec.step_size = rho;
    rec.sample_count = 0;
    for (int s : step.sample_count) rec.sample_count += s;
    double a_mean = 0.0, vr_mean = 0.0, raw_sum = 0.0;
    for (int k = 0; k < K; ++k) {
      a_mean += step.a_hat[k];
      vr_mean += step.variance_ratio[k];
      raw_sum += step.samples_required_raw[k];
    }
    rec.a_hat = a_mean / K;
    rec.variance_ratio = vr_mean / K;
    rec.samples_required_raw = raw_sum;

    if (!q.psi().allFinite()) {
      rec.elbo = std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(std::move(rec));
      trace.stop_reason = "non-finite parameters";
      return HdpFitResult{std::move(q), std::move(trace)};
    }

    const ElboEstimate elbo = hdp_elbo_mc(
        q, objective, options.monitor_samples_per_coordinate, rng);
    rec.elbo = elbo.value;
    rec.elbo_se = elbo.std_error;
    trace.records.push_back(std::move(rec));

    if (monitor.update(elbo.value)) {
      trace.converged = true;
      trace.stop_reason = "converged";
      return HdpFitResult{std::move(q), std::move(trace)};
    }
    if (options.max_total_samples >= 0 &&
        trace.total_samples >= options.max_total_samples) {
      trace.stop_reason = "sample budget exhausted";
      return HdpFitResult{std::move(q), std::move(trace)};
    }
  }
  trace.stop_reason =
      options.max_iterations == 0 ? "zero iteration budget" : "max iterations";
  return HdpFitResult{std::move(q), std::move(trace)};
}

PointFitResult fit_theta_point(const HdpObjective& objective, double grad_tol,
                               int max_iterations) {
  const int K = objective.spec().K;
  const double D = objective.spec().D;
  const double beta = objective.spec().beta;
  const double a0 = objective.spec().alpha / K;
  const Vec& T = objective.log_pi_column_sums();

  Vec z = Vec::Zero(K);  // softmax logits
  auto softmax = [](const Vec& logits) {
    const Vec shifted = logits.array() - logits.maxCoeff();
    Vec e = shifted.array().exp();
    return Vec(e / e.sum());
  };

  Vec theta = softmax(z);
  double value = objective.plugin_objective(theta);
  PointFitResult result;
  result.theta = theta;
  result.objective = value;

  double step = 1e-3 / std::max(1.0, D);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    Vec grad_theta(K);
    for (int k = 0; k < K; ++k) {
      grad_theta[k] = beta * T[k] - D * beta * digamma(beta * theta[k]) +
                      (a0 - 1.0) / theta[k];
    }
    const double inner = theta.dot(grad_theta);
    const Vec grad_z = theta.array() * (grad_theta.array() - inner);
    if (grad_z.lpNorm<Eigen::Infinity>() < grad_tol) {
      result.converged = true;
      result.iterations = iter;
      break;
    }
    // Backtracking ascent step on the logits.
    double trial_step = step * 2.0;
    bool improved = false;
    for (int back = 0; back < 60; ++back) {
      const Vec z_try = z + trial_step * grad_z;
      const Vec theta_try = softmax(z_try);
      const double value_try = objective.plugin_objective(theta_try);
      if (value_try > value) {
        z = z_try;
        theta = theta_try;
        value = value_try;
        step = trial_step;
        improved = true;
        break;
      }
      trial_step *= 0.5;
    }
    result.iterations = iter;
    if (!improved) {
      // No ascent direction at line-search resolution; accept the iterate.
      result.converged = grad_z.lpNorm<Eigen::Infinity>() < 1e-3;
      break;
    }
  }
  result.theta = theta;
  result.objective = value;
  return result;
}

}  // namespace ssvb
