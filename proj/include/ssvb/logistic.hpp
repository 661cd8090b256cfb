#pragma once

#include <vector>

#include "ssvb/ascent.hpp"
#include "ssvb/gaussian.hpp"
#include "ssvb/objective.hpp"

namespace ssvb {

// Binary classification data with labels in {-1, +1} and an all-ones offset
// column appended as the last feature.
struct LogisticDataset {
  Mat X;  // N x d, last column all ones
  Vec y;  // entries in {-1, +1}

  long n_rows() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }

  // Appends the offset column, maps {0,1} labels to {-1,+1} and validates.
  static LogisticDataset from_features(const Mat& features, const Vec& labels);
  void validate() const;
};

struct LogisticModelSpec {
  double prior_scale = 1.0;  // theta ~ Normal(0, prior_scale * I)
};

// ln sigma(y_n x_n^T theta) for one observation.
double log_sigmoid_term(const LogisticDataset& data, long n, const Vec& theta);

// Sum_n ln sigma(y_n x_n^T theta), the intractable likelihood term.
double log_likelihood(const LogisticDataset& data, const Vec& theta);

// Tractable remainder: E_q[ln p(theta)] + H[q], and its gradient in the
// (mu, vech(L)) layout.
double gaussian_prior_entropy_term(const GaussianVariational& q,
                                   const LogisticModelSpec& spec);
Vec gaussian_prior_entropy_grad(const GaussianVariational& q,
                                const LogisticModelSpec& spec);

// Jaakkola-Jordan quadratic lower bound on ln sigma.
// lambda(xi) = (2 sigma(xi) - 1) / (4 xi), continuous at 0 with value 1/8.
double jj_lambda(double xi);
// g_n(theta; xi_n), a pointwise lower bound on ln sigma(y_n x_n^T theta).
double jj_term(const LogisticDataset& data, long n, const Vec& theta,
               double xi_n);
double jj_bound_sum(const LogisticDataset& data, const Vec& theta,
                    const Vec& xi);
// Closed-form E_q[sum_n g_n] and its gradient over (mu, vech(L)).
double jj_expectation(const LogisticDataset& data,
                      const GaussianVariational& q, const Vec& xi);
Vec jj_expectation_grad(const LogisticDataset& data,
                        const GaussianVariational& q, const Vec& xi);
// Fixed point xi_n = sqrt(E_q[(x_n^T theta)^2]); maximizes the JJ bound in xi.
Vec jj_xi_update(const LogisticDataset& data, const GaussianVariational& q);

// Second-order Taylor expansion of ln sigma about mu_hat (not a bound).
double taylor_term(const LogisticDataset& data, long n, const Vec& theta,
                   const Vec& mu_hat);
double taylor_sum(const LogisticDataset& data, const Vec& theta,
                  const Vec& mu_hat);
double taylor_expectation(const LogisticDataset& data,
                          const GaussianVariational& q, const Vec& mu_hat);
Vec taylor_expectation_grad(const LogisticDataset& data,
                            const GaussianVariational& q, const Vec& mu_hat);

// Monte Carlo evaluation of the true objective at q.
ElboEstimate logistic_elbo_mc(const GaussianVariational& q,
                              const LogisticDataset& data,
                              const LogisticModelSpec& spec, long sample_count,
                              Rng& rng);

// MAP + inverse negative Hessian. Throws std::runtime_error when Newton
// fails to reach gradient norm 1e-8 within 100 iterations.
GaussianVariational laplace_fit(const LogisticDataset& data,
                                const LogisticModelSpec& spec);

struct JJFitResult {
  GaussianVariational q;
  Vec xi;
  double bound = 0.0;     // JJ bound value at the fitted q
  int iterations = 0;
};

// Coordinate-ascent variational inference with the JJ bound in place of the
// likelihood terms; exact closed-form updates, monotone in the bound.
JJFitResult jj_coordinate_vb(const LogisticDataset& data,
                             const LogisticModelSpec& spec,
                             double tol = 1e-8, int max_iterations = 1000);

enum class LogisticCv { none, jj, taylor };

// Assembles the ObjectiveSplit for stochastic search on this model. The
// control variate is rebuilt at the current q each iteration (xi from
// jj_xi_update, the Taylor expansion about the current mean).
ObjectiveSplit logistic_objective(const LogisticDataset& data,
                                  const LogisticModelSpec& spec,
                                  LogisticCv cv);

}  // namespace ssvb
