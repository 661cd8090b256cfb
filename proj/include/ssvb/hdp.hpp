#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ssvb/ascent.hpp"
#include "ssvb/dirichlet.hpp"

namespace ssvb {

// Finite two-level Dirichlet hierarchy: theta ~ Dirichlet(alpha/K, ...),
// pi_d ~ Dirichlet(beta theta_1, ..., beta theta_K) for d = 1..D.
// kappa1/kappa2 are the control-variate switch points on beta * E[theta_k].
struct HDPSpec {
  int K = 2;
  int D = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 2.0;

  void validate() const;
};

// Expected second-level log probabilities M(d, k) = E[ln pi_dk] (equal to
// ln pi_dk when the pi_d are observed).
struct SecondLevelStats {
  Mat M;  // D x K, entries <= 0

  void validate() const;
  // T_k = sum_d M(d, k), the per-topic coefficient of beta E[theta_k].
  Vec column_sums() const { return M.colwise().sum(); }
};

struct SyntheticHierarchy {
  Vec theta_star;
  Mat pi;  // D x K
  SecondLevelStats stats;
};

// Draws a hierarchy from the generative process and exposes the pi_d as
// observed second-level statistics.
SyntheticHierarchy generate_synthetic(const HDPSpec& spec, Rng& rng);

enum class HdpCvMode { log_cv, taylor_cv };

// Switch policy with hysteresis: starting mode is log below kappa2, Taylor
// above; an active Taylor CV switches back down only below kappa1.
HdpCvMode select_cv_mode(double beta_theta_bar,
                         std::optional<HdpCvMode> previous,
                         const HDPSpec& spec);

// One per-coordinate control variate bound to the current q:
//   log CV    g_k(t) = D ln(beta t), scale fixed at 1 so the residual
//             f_k - g_k = -D ln Gamma(beta t + 1) stays finite at t -> 0;
//   Taylor CV g_k(t) = -D [ln Gamma(beta tb) + beta (t - tb) psi0(beta tb)]
//             about tb = E[theta_k], an upper bound on f_k; scale estimated.
struct HdpCoordinateCv {
  HdpCvMode mode = HdpCvMode::log_cv;
  std::function<double(double)> g;
  double expected_value = 0.0;
  Vec expected_grad_c;  // gradient of E_q[g_k] with respect to c
  std::optional<double> fixed_scale;
};

// The theta-portion of the objective for fixed second-level statistics.
class HdpObjective {
 public:
  HdpObjective(HDPSpec spec, SecondLevelStats stats);

  const HDPSpec& spec() const { return spec_; }
  const Vec& log_pi_column_sums() const { return T_; }

  // Intractable per-coordinate term f_k(theta_k) = -D ln Gamma(beta theta_k).
  double f_k(double theta_k) const;

  // Tractable remainder: sum_k beta E[theta_k] T_k + E[ln p(theta) - ln q].
  double tractable_term(const DirichletVariational& q) const;
  Vec tractable_grad_c(const DirichletVariational& q) const;

  // Control variate for coordinate k in the given mode at the current q.
  HdpCoordinateCv coordinate_cv(const DirichletVariational& q, int k,
                                HdpCvMode mode) const;
  // Mode chosen from beta * E[theta_k] (piecewise selection).
  HdpCoordinateCv coordinate_cv(const DirichletVariational& q, int k,
                                std::optional<HdpCvMode> previous) const;

  // Objective with q collapsed to a point mass at theta (entropy dropped).
  double plugin_objective(const Vec& theta) const;
  double uniform_theta_objective() const;

 private:
  HDPSpec spec_;
  SecondLevelStats stats_;
  Vec T_;
};

struct HdpStepOptions {
  double epsilon = 0.1;
  int pilot_samples = 24;
  SampleClamp clamp;
  bool reuse_pilot = true;
  // Estimate with the full Dirichlet score instead of the beta marginal
  // (the higher-variance alternative kept for comparison).
  bool full_dirichlet_score = false;
};

struct HdpStepResult {
  Vec grad_psi;  // gradient over ln c, ready for apply_step
  long long gradient_samples = 0;
  // Per-coordinate diagnostics.
  std::vector<int> sample_count;
  std::vector<double> a_hat;
  std::vector<double> variance_ratio;
  std::vector<double> samples_required_raw;
  std::vector<HdpCvMode> mode;
};

// One stochastic-gradient evaluation: per coordinate, pilot statistics on
// the marginal (or full) score, control-variate selection, adaptive sample
// count, and the corrected estimate; combined with the analytic tractable
// gradient and mapped to log-space coordinates.
HdpStepResult hdp_gradient_step(const DirichletVariational& q,
                                const HdpObjective& objective,
                                const HdpStepOptions& options,
                                std::vector<std::optional<HdpCvMode>>& cv_state,
                                Rng& rng);

// Monte Carlo estimate of the theta-portion objective. Each intractable
// E[ln Gamma(beta theta_k)] is computed as E[ln Gamma(beta theta_k + 1)]
// (estimated over the beta marginal) minus the analytic E[ln(beta theta_k)],
// which keeps the integrand bounded near zero.
ElboEstimate hdp_elbo_mc(const DirichletVariational& q,
                         const HdpObjective& objective,
                         long samples_per_coordinate, Rng& rng);

struct HdpFitOptions {
  StepSchedule schedule{1.0, 10.0, 0.75};
  HdpStepOptions step;
  int max_iterations = 500;
  long long max_total_samples = -1;
  int monitor_samples_per_coordinate = 64;
  int convergence_window = 20;
  double convergence_rel_tol = 1e-4;
  // Infinity-norm cap on the applied log-space step (<= 0 disables).
  double max_step = 2.0;
  // Normalize each step by the current gradient infinity norm, so rho_t is
  // the log-space step length itself. The raw gradient magnitude scales
  // with beta, D and the log pi values, which no single rho0 can serve
  // across a parameter grid.
  bool normalize_step = true;
};

struct HdpFitResult {
  DirichletVariational q;
  AscentTrace trace;
};

// Stochastic ascent on the Dirichlet variational posterior, starting from
// the prior c = alpha/K.
HdpFitResult fit_hdp_stochastic(const HdpObjective& objective,
                                const HdpFitOptions& options, Rng& rng);

struct PointFitResult {
  Vec theta;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Maximizes the plugin objective over the simplex through a softmax
// parameterization; returns the best iterate with a warning flag when the
// gradient tolerance is not reached.
PointFitResult fit_theta_point(const HdpObjective& objective,
                               double grad_tol = 1e-6,
                               int max_iterations = 5000);

}  // namespace ssvb
