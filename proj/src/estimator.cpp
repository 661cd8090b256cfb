#include "ssvb/estimator.hpp"

#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssvb {

namespace {

SampleBatch allocate_batch(bool has_cv, long S, int K) {
  SampleBatch batch;
  batch.f.resize(S);
  if (has_cv) batch.g.resize(S);
  batch.scores.resize(S, K);
  return batch;
}

void fill_row(SampleBatch& batch, const ThetaFn& f, const ThetaFn* g,
              const VariationalFamily& q, const Vec& theta, long s) {
  batch.f[s] = f(theta);
  if (g != nullptr) batch.g[s] = (*g)(theta);
  batch.scores.row(s) = q.score(theta).transpose();
}

}  // namespace

void check_batch_finite(const SampleBatch& batch) {
  for (long s = 0; s < batch.size(); ++s) {
    if (!std::isfinite(batch.f[s])) {
      throw NumericalError("non-finite f(theta)", s);
    }
    if (batch.has_cv() && !std::isfinite(batch.g[s])) {
      throw NumericalError("non-finite g(theta)", s);
    }
    if (!batch.scores.row(s).allFinite()) {
      throw NumericalError("non-finite score", s);
    }
  }
}

SampleBatch evaluate_batch_serial(const ThetaFn& f, const ThetaFn* g,
                                  const VariationalFamily& q,
                                  const std::vector<Vec>& samples) {
  const long S = static_cast<long>(samples.size());
  if (S < 1) throw std::invalid_argument("evaluate_batch: need >= 1 sample");
  SampleBatch batch = allocate_batch(g != nullptr, S, q.psi_dim());
  for (long s = 0; s < S; ++s) {
    fill_row(batch, f, g, q, samples[s], s);
  }
  check_batch_finite(batch);
  return batch;
}

SampleBatch evaluate_batch(const ThetaFn& f, const ThetaFn* g,
                           const VariationalFamily& q,
                           const std::vector<Vec>& samples) {
  const long S = static_cast<long>(samples.size());
  if (S < 1) throw std::invalid_argument("evaluate_batch: need >= 1 sample");
  SampleBatch batch = allocate_batch(g != nullptr, S, q.psi_dim());

  long error_index = -1;
  std::string error_what;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long s = 0; s < S; ++s) {
    try {
      fill_row(batch, f, g, q, samples[s], s);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical(ssvb_eval_error)
#endif
      if (error_index < 0 || s < error_index) {
        error_index = s;
        error_what = e.what();
      }
    }
  }
  if (error_index >= 0) {
    throw NumericalError("evaluation failed (" + error_what + ")",
                         error_index);
  }
  check_batch_finite(batch);
  return batch;
}

Vec evaluate_f_serial(const ThetaFn& f, const std::vector<Vec>& samples) {
  const long S = static_cast<long>(samples.size());
  if (S < 1) throw std::invalid_argument("evaluate_f: need >= 1 sample");
  Vec out(S);
  for (long s = 0; s < S; ++s) out[s] = f(samples[s]);
  for (long s = 0; s < S; ++s) {
    if (!std::isfinite(out[s])) throw NumericalError("non-finite f(theta)", s);
  }
  return out;
}

Vec evaluate_f(const ThetaFn& f, const std::vector<Vec>& samples) {
  const long S = static_cast<long>(samples.size());
  if (S < 1) throw std::invalid_argument("evaluate_f: need >= 1 sample");
  Vec out(S);
  long error_index = -1;
  std::string error_what;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long s = 0; s < S; ++s) {
    try {
      out[s] = f(samples[s]);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical(ssvb_eval_error)
#endif
      if (error_index < 0 || s < error_index) {
        error_index = s;
        error_what = e.what();
      }
    }
  }
  if (error_index >= 0) {
    throw NumericalError("evaluation failed (" + error_what + ")",
                         error_index);
  }
  for (long s = 0; s < S; ++s) {
    if (!std::isfinite(out[s])) throw NumericalError("non-finite f(theta)", s);
  }
  return out;
}

double SampleStats::residual() const {
  // beta = 0 only with alpha = 0 (Cauchy-Schwarz), i.e. no usable control
  // variate; the residual is then the full variance sum.
  if (beta <= 0.0) return gamma;
  return gamma - alpha * alpha / beta;
}

double SampleStats::residual_at_scale(double a) const {
  return gamma - 2.0 * a * alpha + a * a * beta;
}

Vec score_gradient_raw(const SampleBatch& batch) {
  return batch.scores.transpose() * batch.f / static_cast<double>(batch.size());
}

Vec score_gradient_raw(const ThetaFn& f, const VariationalFamily& q,
                       const std::vector<Vec>& samples) {
  return score_gradient_raw(evaluate_batch(f, nullptr, q, samples));
}

SampleStats pilot_stats(const SampleBatch& batch) {
  const long S = batch.size();
  if (S < 2) {
    throw std::invalid_argument("pilot_stats: need >= 2 pilot samples");
  }
  const bool has_cv = batch.has_cv();
  const long K = batch.scores.cols();
  SampleStats stats;
  stats.pilot_count = static_cast<int>(S);
  const double norm = 1.0 / static_cast<double>(S - 1);
  // Fixed accumulation order (k outer, s inner) for determinism.
  for (long k = 0; k < K; ++k) {
    double mean_fk = 0.0, mean_gk = 0.0;
    for (long s = 0; s < S; ++s) {
      mean_fk += batch.f[s] * batch.scores(s, k);
      if (has_cv) mean_gk += batch.g[s] * batch.scores(s, k);
    }
    mean_fk /= static_cast<double>(S);
    mean_gk /= static_cast<double>(S);
    double var_f = 0.0, var_g = 0.0, cov = 0.0;
    for (long s = 0; s < S; ++s) {
      const double df = batch.f[s] * batch.scores(s, k) - mean_fk;
      var_f += df * df;
      if (has_cv) {
        const double dg = batch.g[s] * batch.scores(s, k) - mean_gk;
        var_g += dg * dg;
        cov += df * dg;
      }
    }
    stats.gamma += var_f * norm;
    stats.beta += var_g * norm;
    stats.alpha += cov * norm;
  }
  return stats;
}

SampleStats pilot_stats(const ThetaFn& f, const ThetaFn& g,
                        const VariationalFamily& q,
                        const std::vector<Vec>& pilot_samples) {
  return pilot_stats(evaluate_batch(f, &g, q, pilot_samples));
}

double optimal_scale(const SampleStats& stats) {
  if (!stats.cv_informative()) {
    throw std::domain_error("control variate uninformative");
  }
  return stats.alpha / stats.beta;
}

int required_samples(const SampleStats& stats, double epsilon, int dim,
                     const SampleClamp& clamp) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("required_samples: epsilon must be positive");
  }
  if (dim < 1) {
    throw std::invalid_argument("required_samples: dimension must be >= 1");
  }
  const double residual = stats.residual();
  if (residual < -1e-9 * stats.gamma) {
    throw std::domain_error("inconsistent pilot statistics");
  }
  const double raw = std::max(residual, 0.0) / (epsilon * dim);
  double s = std::ceil(raw);
  if (s < clamp.min_samples) s = clamp.min_samples;
  if (s > clamp.max_samples) s = clamp.max_samples;
  return static_cast<int>(s);
}

int required_samples_at_scale(const SampleStats& stats, double scale,
                              double epsilon, int dim,
                              const SampleClamp& clamp) {
  if (!(epsilon > 0.0) || dim < 1) {
    throw std::invalid_argument("required_samples_at_scale: bad arguments");
  }
  const double raw =
      std::max(stats.residual_at_scale(scale), 0.0) / (epsilon * dim);
  double s = std::ceil(raw);
  if (s < clamp.min_samples) s = clamp.min_samples;
  if (s > clamp.max_samples) s = clamp.max_samples;
  return static_cast<int>(s);
}

double required_samples_raw(const SampleStats& stats, double epsilon,
                            int dim) {
  return stats.gamma / (epsilon * dim);
}

Vec cv_gradient(const SampleBatch& batch, double a_hat,
                const Vec& expected_g_grad) {
  if (!std::isfinite(a_hat)) {
    throw std::invalid_argument("cv_gradient: non-finite scale");
  }
  if (a_hat == 0.0) {
    return score_gradient_raw(batch);
  }
  if (!batch.has_cv()) {
    throw std::invalid_argument("cv_gradient: batch has no control variate");
  }
  const Vec weights = batch.f - a_hat * batch.g;
  Vec grad = batch.scores.transpose() * weights /
             static_cast<double>(batch.size());
  grad += a_hat * expected_g_grad;
  return grad;
}

double variance_reduction_ratio(const Vec& f_samples, const Vec& g_samples) {
  const long S = f_samples.size();
  if (S < 2 || g_samples.size() != S) {
    throw std::invalid_argument(
        "variance_reduction_ratio: need >= 2 aligned samples");
  }
  const double mean_f = f_samples.mean();
  const double mean_g = g_samples.mean();
  double var_f = 0.0, var_g = 0.0, cov = 0.0;
  for (long s = 0; s < S; ++s) {
    const double df = f_samples[s] - mean_f;
    const double dg = g_samples[s] - mean_g;
    var_f += df * df;
    var_g += dg * dg;
    cov += df * dg;
  }
  if (var_g <= 0.0) {
    throw std::domain_error("variance_reduction_ratio: g has zero variance");
  }
  if (var_f <= 0.0) return 0.0;
  const double corr2 = (cov * cov) / (var_f * var_g);
  return 1.0 - corr2;
}

}  // namespace ssvb
