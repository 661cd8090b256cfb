#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ssvb/family.hpp"

namespace ssvb {

using ThetaFn = std::function<double(const Vec& theta)>;

// Raised when f(theta) or the score is non-finite at some draw.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long sample_index)
      : std::runtime_error(what + " at sample " + std::to_string(sample_index)),
        sample_index(sample_index) {}
  long sample_index;
};

// Per-sample evaluations of f, g and the score at a fixed q. Row s of scores
// is grad_psi ln q(theta^(s) | psi); g has size 0 when no control variate is
// attached.
struct SampleBatch {
  Vec f;
  Vec g;
  Mat scores;

  long size() const { return f.size(); }
  bool has_cv() const { return g.size() > 0; }
};

// Evaluates a batch of draws. Each sample is independent, so the evaluation
// loop is OpenMP-parallel; every sample writes its own row and the results
// are bitwise identical to the serial reference at any thread count.
SampleBatch evaluate_batch(const ThetaFn& f, const ThetaFn* g,
                           const VariationalFamily& q,
                           const std::vector<Vec>& samples);

// Plain-loop reference implementation, kept for testing and benchmarking.
SampleBatch evaluate_batch_serial(const ThetaFn& f, const ThetaFn* g,
                                  const VariationalFamily& q,
                                  const std::vector<Vec>& samples);

void check_batch_finite(const SampleBatch& batch);

// f-only evaluation (no scores), used for ELBO monitoring where the score
// matrix would be wasted work.
Vec evaluate_f(const ThetaFn& f, const std::vector<Vec>& samples);
Vec evaluate_f_serial(const ThetaFn& f, const std::vector<Vec>& samples);

// Summed per-coordinate sample statistics of the pilot draws
// (Algorithm 1 steps 3-4):
//   alpha = sum_k Cov(f dlnq/dpsi_k, g dlnq/dpsi_k)
//   beta  = sum_k Var(g dlnq/dpsi_k)
//   gamma = sum_k Var(f dlnq/dpsi_k)
struct SampleStats {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  int pilot_count = 0;

  bool cv_informative() const { return beta > 0.0; }
  // gamma - alpha^2 / beta, the optimally scaled residual variance sum.
  double residual() const;
  // gamma - 2 a alpha + a^2 beta, the residual when the scale is pinned
  // (equals residual() at a = alpha/beta).
  double residual_at_scale(double a) const;
};

// Per-iteration sample count bounds; the raw formula is unbounded above and
// can return values below one.
struct SampleClamp {
  int min_samples = 8;
  int max_samples = 50000;
};

// Monte Carlo score-function gradient (1/S) sum_s f(theta^s) grad ln q.
Vec score_gradient_raw(const SampleBatch& batch);
Vec score_gradient_raw(const ThetaFn& f, const VariationalFamily& q,
                       const std::vector<Vec>& samples);

// With no control variate in the batch, alpha = beta = 0 and only gamma is
// filled (the raw-estimator case).
SampleStats pilot_stats(const SampleBatch& batch);
SampleStats pilot_stats(const ThetaFn& f, const ThetaFn& g,
                        const VariationalFamily& q,
                        const std::vector<Vec>& pilot_samples);

// a^ = alpha / beta. Throws std::domain_error when the control variate is
// uninformative (beta = 0); callers fall back to the raw estimator.
double optimal_scale(const SampleStats& stats);

// ceil((gamma - alpha^2/beta) / (epsilon K)) clamped to the given bounds.
// Throws std::domain_error("inconsistent pilot statistics") when the
// residual is negative beyond floating-point tolerance.
int required_samples(const SampleStats& stats, double epsilon, int dim,
                     const SampleClamp& clamp = {});

// Sample count when the control-variate scale is pinned instead of set to
// alpha/beta: ceil((gamma - 2 a alpha + a^2 beta) / (epsilon K)), clamped.
int required_samples_at_scale(const SampleStats& stats, double scale,
                              double epsilon, int dim,
                              const SampleClamp& clamp = {});

// Counterfactual count without variance reduction: gamma / (epsilon K),
// unclamped (the Figure-3-style diagnostic series).
double required_samples_raw(const SampleStats& stats, double epsilon, int dim);

// Control-variate-corrected gradient (Eq. 12 shape):
//   a^ * expected_g_grad + (1/S) sum_s {f - a^ g} grad ln q.
// With a^ = 0 this reduces exactly to score_gradient_raw on the same batch.
Vec cv_gradient(const SampleBatch& batch, double a_hat,
                const Vec& expected_g_grad);

// 1 - Corr(f, g)^2 over aligned scalar samples. Throws std::domain_error
// when g has zero variance (diagnostic unavailable).
double variance_reduction_ratio(const Vec& f_samples, const Vec& g_samples);

}  // namespace ssvb
