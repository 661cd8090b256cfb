#include "ssvb/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include "ssvb/special_functions.hpp"

namespace ssvb {

namespace {
constexpr double kLnTwoPi = 1.8378770664093454836;

const GaussianVariational& as_gaussian(const VariationalFamily& q) {
  const auto* g = dynamic_cast<const GaussianVariational*>(&q);
  if (g == nullptr) {
    throw std::invalid_argument("logistic model requires a Gaussian family");
  }
  return *g;
}

// x_n^T Sigma x_n = ||L^T x_n||^2 for all rows at once; column n of (X L)^T.
Vec quadratic_forms(const Mat& X, const Mat& L) {
  return (X * L).rowwise().squaredNorm();
}

// sum_n ln sigma(z_n) = -sum_n softplus(-z_n), vectorized.
double sum_log_sigmoid(const Vec& z) {
  const auto x = (-z).array();
  const auto m = x.max(0.0);
  return -(m + ((-m).exp() + (x - m).exp()).log()).sum();
}

}  // namespace

LogisticDataset LogisticDataset::from_features(const Mat& features,
                                               const Vec& labels) {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("LogisticDataset: feature/label count mismatch");
  }
  LogisticDataset data;
  data.X.resize(features.rows(), features.cols() + 1);
  data.X.leftCols(features.cols()) = features;
  data.X.rightCols(1).setOnes();
  data.y.resize(labels.size());
  for (Eigen::Index n = 0; n < labels.size(); ++n) {
    const double v = labels[n];
    if (v == 1.0 || v == -1.0) {
      data.y[n] = v;
    } else if (v == 0.0) {
      data.y[n] = -1.0;
    } else {
      throw std::invalid_argument("LogisticDataset: label not in {0,1,-1,+1}");
    }
  }
  data.validate();
  return data;
}

void LogisticDataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) {
    throw std::invalid_argument("LogisticDataset: empty design matrix");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("LogisticDataset: label count mismatch");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("LogisticDataset: non-finite feature");
  }
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    if (y[n] != 1.0 && y[n] != -1.0) {
      throw std::invalid_argument("LogisticDataset: labels must be -1 or +1");
    }
  }
}

double log_sigmoid_term(const LogisticDataset& data, long n, const Vec& theta) {
  return log_sigmoid(data.y[n] * data.X.row(n).dot(theta));
}

double log_likelihood(const LogisticDataset& data, const Vec& theta) {
  return sum_log_sigmoid((data.X * theta).cwiseProduct(data.y));
}

double gaussian_prior_entropy_term(const GaussianVariational& q,
                                   const LogisticModelSpec& spec) {
  const int d = q.theta_dim();
  const double c = spec.prior_scale;
  const double trace_sigma = q.factor().squaredNorm();
  const double expected_log_prior =
      -0.5 * d * (kLnTwoPi + std::log(c)) -
      (q.mean().squaredNorm() + trace_sigma) / (2.0 * c);
  return expected_log_prior + q.entropy();
}

Vec gaussian_prior_entropy_grad(const GaussianVariational& q,
                                const LogisticModelSpec& spec) {
  const int d = q.theta_dim();
  const double c = spec.prior_scale;
  const Vec grad_mu = -q.mean() / c;
  Mat grad_L = -q.factor() / c;
  for (int i = 0; i < d; ++i) grad_L(i, i) += 1.0 / q.factor()(i, i);
  return GaussianVariational::pack_gradient(grad_mu, grad_L);
}

double jj_lambda(double xi) {
  if (!(xi > 0.0)) throw std::domain_error("jj_lambda: xi must be positive");
  if (xi < 1e-4) {
    return 0.125 - xi * xi / 96.0;  // series limit of (2 sigma(xi)-1)/(4 xi)
  }
  return (2.0 * sigmoid(xi) - 1.0) / (4.0 * xi);
}

double jj_term(const LogisticDataset& data, long n, const Vec& theta,
               double xi_n) {
  const double z = data.X.row(n).dot(theta);
  return log_sigmoid(xi_n) + 0.5 * (data.y[n] * z - xi_n) -
         jj_lambda(xi_n) * (z * z - xi_n * xi_n);
}

double jj_bound_sum(const LogisticDataset& data, const Vec& theta,
                    const Vec& xi) {
  const Vec z = data.X * theta;
  double sum = 0.0;
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    sum += log_sigmoid(xi[n]) + 0.5 * (data.y[n] * z[n] - xi[n]) -
           jj_lambda(xi[n]) * (z[n] * z[n] - xi[n] * xi[n]);
  }
  return sum;
}

double jj_expectation(const LogisticDataset& data,
                      const GaussianVariational& q, const Vec& xi) {
  const Vec m = data.X * q.mean();
  const Vec v = quadratic_forms(data.X, q.factor());
  double sum = 0.0;
  for (Eigen::Index n = 0; n < m.size(); ++n) {
    const double lam = jj_lambda(xi[n]);
    sum += log_sigmoid(xi[n]) + 0.5 * (data.y[n] * m[n] - xi[n]) -
           lam * (v[n] + m[n] * m[n] - xi[n] * xi[n]);
  }
  return sum;
}

Vec jj_expectation_grad(const LogisticDataset& data,
                        const GaussianVariational& q, const Vec& xi) {
  const Vec m = data.X * q.mean();
  Vec lam(xi.size());
  for (Eigen::Index n = 0; n < xi.size(); ++n) lam[n] = jj_lambda(xi[n]);

  const Vec grad_mu =
      data.X.transpose() * (0.5 * data.y - 2.0 * lam.cwiseProduct(m));
  const Mat A = data.X.transpose() * lam.asDiagonal() * data.X;
  const Mat grad_L = -2.0 * (A * q.factor());
  return GaussianVariational::pack_gradient(grad_mu, grad_L);
}

Vec jj_xi_update(const LogisticDataset& data, const GaussianVariational& q) {
  const Vec m = data.X * q.mean();
  const Vec v = quadratic_forms(data.X, q.factor());
  return (v + m.cwiseProduct(m)).cwiseSqrt();
}

double taylor_term(const LogisticDataset& data, long n, const Vec& theta,
                   const Vec& mu_hat) {
  const double s = sigmoid(data.y[n] * data.X.row(n).dot(mu_hat));
  const double t = data.X.row(n).dot(theta - mu_hat);
  return std::log(s) + data.y[n] * (1.0 - s) * t -
         0.5 * s * (1.0 - s) * t * t;
}

double taylor_sum(const LogisticDataset& data, const Vec& theta,
                  const Vec& mu_hat) {
  const Vec z_hat = (data.X * mu_hat).cwiseProduct(data.y);
  const Vec t = data.X * (theta - mu_hat);
  double sum = 0.0;
  for (Eigen::Index n = 0; n < t.size(); ++n) {
    const double s = sigmoid(z_hat[n]);
    sum += log_sigmoid(z_hat[n]) + data.y[n] * (1.0 - s) * t[n] -
           0.5 * s * (1.0 - s) * t[n] * t[n];
  }
  return sum;
}

double taylor_expectation(const LogisticDataset& data,
                          const GaussianVariational& q, const Vec& mu_hat) {
  const Vec z_hat = (data.X * mu_hat).cwiseProduct(data.y);
  const Vec m = data.X * (q.mean() - mu_hat);
  const Vec v = quadratic_forms(data.X, q.factor());
  double sum = 0.0;
  for (Eigen::Index n = 0; n < m.size(); ++n) {
    const double s = sigmoid(z_hat[n]);
    sum += log_sigmoid(z_hat[n]) + data.y[n] * (1.0 - s) * m[n] -
           0.5 * s * (1.0 - s) * (v[n] + m[n] * m[n]);
  }
  return sum;
}

Vec taylor_expectation_grad(const LogisticDataset& data,
                            const GaussianVariational& q, const Vec& mu_hat) {
  const Vec z_hat = (data.X * mu_hat).cwiseProduct(data.y);
  const Vec m = data.X * (q.mean() - mu_hat);
  Vec w(z_hat.size());
  Vec coef(z_hat.size());
  for (Eigen::Index n = 0; n < z_hat.size(); ++n) {
    const double s = sigmoid(z_hat[n]);
    w[n] = s * (1.0 - s);
    coef[n] = data.y[n] * (1.0 - s) - w[n] * m[n];
  }
  const Vec grad_mu = data.X.transpose() * coef;
  const Mat A = data.X.transpose() * w.asDiagonal() * data.X;
  const Mat grad_L = -(A * q.factor());
  return GaussianVariational::pack_gradient(grad_mu, grad_L);
}

ElboEstimate logistic_elbo_mc(const GaussianVariational& q,
                              const LogisticDataset& data,
                              const LogisticModelSpec& spec, long sample_count,
                              Rng& rng) {
  ObjectiveSplit split =
      logistic_objective(data, spec, LogisticCv::none);
  return mc_elbo(split, q, sample_count, rng);
}

GaussianVariational laplace_fit(const LogisticDataset& data,
                                const LogisticModelSpec& spec) {
  const int d = data.dim();
  const double c = spec.prior_scale;
  Vec theta = Vec::Zero(d);

  auto log_posterior = [&](const Vec& th) {
    return log_likelihood(data, th) - th.squaredNorm() / (2.0 * c);
  };

  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const Vec z = data.X * theta;
    Vec weights(z.size());
    Vec resid(z.size());
    for (Eigen::Index n = 0; n < z.size(); ++n) {
      const double s = sigmoid(z[n]);
      weights[n] = s * (1.0 - s);
      resid[n] = data.y[n] * (1.0 - sigmoid(data.y[n] * z[n]));
    }
    const Vec grad = data.X.transpose() * resid - theta / c;
    if (grad.norm() < 1e-8) {
      converged = true;
      break;
    }
    Mat neg_hessian = data.X.transpose() * weights.asDiagonal() * data.X;
    neg_hessian.diagonal().array() += 1.0 / c;
    const Vec step = neg_hessian.llt().solve(grad);

    // The log posterior is concave; a simple backtracking guard keeps far
    // starts from overshooting. Decreases within evaluation rounding are
    // accepted, otherwise the guard stalls near the optimum.
    double scale = 1.0;
    const double base = log_posterior(theta);
    const double tol = 1e-10 * (1.0 + std::abs(base));
    while (scale > 1e-8 && log_posterior(theta + scale * step) < base - tol) {
      scale *= 0.5;
    }
    theta += scale * step;
  }
  if (!converged) {
    throw std::runtime_error("laplace_fit: Newton did not converge");
  }

  const Vec z = data.X * theta;
  Vec weights(z.size());
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    const double s = sigmoid(z[n]);
    weights[n] = s * (1.0 - s);
  }
  Mat neg_hessian = data.X.transpose() * weights.asDiagonal() * data.X;
  neg_hessian.diagonal().array() += 1.0 / c;
  const Mat sigma = neg_hessian.llt().solve(Mat::Identity(d, d));
  Mat L = sigma.llt().matrixL();
  for (int i = 0; i < d; ++i) {
    if (L(i, i) < GaussianVariational::kDiagFloor) {
      L(i, i) = GaussianVariational::kDiagFloor;
    }
  }
  return GaussianVariational(theta, L);
}

JJFitResult jj_coordinate_vb(const LogisticDataset& data,
                             const LogisticModelSpec& spec, double tol,
                             int max_iterations) {
  const int d = data.dim();
  const double c = spec.prior_scale;
  Vec xi = Vec::Ones(data.n_rows());
  const Vec half_xty = 0.5 * (data.X.transpose() * data.y);

  GaussianVariational q = GaussianVariational::standard(d);
  double bound = -std::numeric_limits<double>::infinity();
  int iterations = 0;

  for (int iter = 1; iter <= max_iterations; ++iter) {
    Vec lam(xi.size());
    for (Eigen::Index n = 0; n < xi.size(); ++n) lam[n] = jj_lambda(xi[n]);
    Mat precision = 2.0 * (data.X.transpose() * lam.asDiagonal() * data.X);
    precision.diagonal().array() += 1.0 / c;
    const Mat sigma = precision.llt().solve(Mat::Identity(d, d));
    const Vec mu = sigma * half_xty;
    Mat L = sigma.llt().matrixL();
    for (int i = 0; i < d; ++i) {
      if (L(i, i) < GaussianVariational::kDiagFloor) {
        L(i, i) = GaussianVariational::kDiagFloor;
      }
    }
    q = GaussianVariational(mu, L);
    xi = jj_xi_update(data, q);

    const double new_bound =
        jj_expectation(data, q, xi) + gaussian_prior_entropy_term(q, spec);
    iterations = iter;
    if (std::isfinite(bound) && new_bound - bound < tol) {
      bound = new_bound;
      break;
    }
    bound = new_bound;
  }
  return JJFitResult{std::move(q), std::move(xi), bound, iterations};
}

ObjectiveSplit logistic_objective(const LogisticDataset& data,
                                  const LogisticModelSpec& spec,
                                  LogisticCv cv) {
  ObjectiveSplit split;
  split.f = [&data](const Vec& theta) { return log_likelihood(data, theta); };
  split.h = [&data, spec](const VariationalFamily& q) {
    return gaussian_prior_entropy_term(as_gaussian(q), spec);
  };
  split.h_grad = [&data, spec](const VariationalFamily& q) {
    return gaussian_prior_entropy_grad(as_gaussian(q), spec);
  };
  switch (cv) {
    case LogisticCv::none:
      break;
    case LogisticCv::jj:
      split.make_cv = [&data](const VariationalFamily& family) {
        const auto& q = as_gaussian(family);
        const Vec xi = jj_xi_update(data, q);
        // g(theta) = const + b^T z - sum_n lam_n z_n^2 with z = X theta;
        // precomputing the per-row coefficients keeps the per-sample cost to
        // one matrix-vector product.
        Vec lam(xi.size());
        double constant = 0.0;
        for (Eigen::Index n = 0; n < xi.size(); ++n) {
          lam[n] = jj_lambda(xi[n]);
          constant += log_sigmoid(xi[n]) - 0.5 * xi[n] + lam[n] * xi[n] * xi[n];
        }
        const Vec linear = 0.5 * data.y;
        ControlVariate out;
        out.g = [&data, constant, linear, lam](const Vec& theta) {
          const Vec z = data.X * theta;
          return constant + linear.dot(z) - lam.dot(z.cwiseProduct(z));
        };
        out.expected_value = jj_expectation(data, q, xi);
        out.expected_grad = jj_expectation_grad(data, q, xi);
        return out;
      };
      break;
    case LogisticCv::taylor:
      split.make_cv = [&data](const VariationalFamily& family) {
        const auto& q = as_gaussian(family);
        const Vec mu_hat = q.mean();
        const Vec z_hat = data.X * mu_hat;
        Vec linear(z_hat.size()), quad(z_hat.size());
        double constant = 0.0;
        for (Eigen::Index n = 0; n < z_hat.size(); ++n) {
          const double s = sigmoid(data.y[n] * z_hat[n]);
          constant += log_sigmoid(data.y[n] * z_hat[n]);
          linear[n] = data.y[n] * (1.0 - s);
          quad[n] = 0.5 * s * (1.0 - s);
        }
        ControlVariate out;
        out.g = [&data, constant, linear, quad, z_hat](const Vec& theta) {
          const Vec t = data.X * theta - z_hat;
          return constant + linear.dot(t) - quad.dot(t.cwiseProduct(t));
        };
        out.expected_value = taylor_expectation(data, q, mu_hat);
        out.expected_grad = taylor_expectation_grad(data, q, mu_hat);
        return out;
      };
      break;
  }
  return split;
}

}  // namespace ssvb
