#include "ssvb/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace ssvb {

namespace {
constexpr double kLnTwoPi = 1.8378770664093454836;
}

GaussianVariational::GaussianVariational(Vec mu, Mat L)
    : mu_(std::move(mu)), L_(std::move(L)) {
  const auto d = mu_.size();
  if (d < 1 || L_.rows() != d || L_.cols() != d) {
    throw std::invalid_argument("GaussianVariational: dimension mismatch");
  }
  L_ = L_.triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(L_(i, i) >= kDiagFloor)) {
      throw std::invalid_argument(
          "GaussianVariational: factor diagonal below floor");
    }
  }
  if (!mu_.allFinite() || !L_.allFinite()) {
    throw std::invalid_argument("GaussianVariational: non-finite parameters");
  }
}

GaussianVariational GaussianVariational::standard(int dim) {
  return GaussianVariational(Vec::Zero(dim), Mat::Identity(dim, dim));
}

GaussianVariational GaussianVariational::isotropic(int dim, double scale) {
  return GaussianVariational(Vec::Zero(dim),
                             scale * Mat::Identity(dim, dim));
}

int GaussianVariational::psi_dim() const {
  const int d = theta_dim();
  return d + d * (d + 1) / 2;
}

int GaussianVariational::vech_index(int i, int j, int d) {
  // Column-major lower triangle: column j contributes d - j entries.
  return j * d - j * (j - 1) / 2 + (i - j);
}

Vec GaussianVariational::psi() const {
  const int d = theta_dim();
  Vec out(psi_dim());
  out.head(d) = mu_;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      out[d + vech_index(i, j, d)] = L_(i, j);
    }
  }
  return out;
}

Vec GaussianVariational::pack_gradient(const Vec& grad_mu, const Mat& grad_L) {
  const int d = static_cast<int>(grad_mu.size());
  Vec out(d + d * (d + 1) / 2);
  out.head(d) = grad_mu;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      out[d + vech_index(i, j, d)] = grad_L(i, j);
    }
  }
  return out;
}

Vec GaussianVariational::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = theta_dim();
  Vec z(d);
  for (int i = 0; i < d; ++i) z[i] = normal(rng);
  return mu_ + L_.triangularView<Eigen::Lower>() * z;
}

double GaussianVariational::log_density(const Vec& theta) const {
  const int d = theta_dim();
  const Vec u = L_.triangularView<Eigen::Lower>().solve(theta - mu_);
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += std::log(L_(i, i));
  return -0.5 * d * kLnTwoPi - log_det - 0.5 * u.squaredNorm();
}

Vec GaussianVariational::score(const Vec& theta) const {
  const int d = theta_dim();
  // u = L^-1 (theta - mu), v = L^-T u = Sigma^-1 (theta - mu)
  const Vec u = L_.triangularView<Eigen::Lower>().solve(theta - mu_);
  const Vec v = L_.transpose().triangularView<Eigen::Upper>().solve(u);

  Vec out(psi_dim());
  out.head(d) = v;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      double g = v[i] * u[j];
      if (i == j) g -= 1.0 / L_(i, i);
      out[d + vech_index(i, j, d)] = g;
    }
  }
  return out;
}

double GaussianVariational::entropy() const {
  const int d = theta_dim();
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += std::log(L_(i, i));
  return 0.5 * d * (kLnTwoPi + 1.0) + log_det;
}

void GaussianVariational::apply_step(const Vec& grad_psi, double rho) {
  const int d = theta_dim();
  if (grad_psi.size() != psi_dim()) {
    throw std::invalid_argument("GaussianVariational::apply_step: bad size");
  }
  mu_ += rho * grad_psi.head(d);
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      L_(i, j) += rho * grad_psi[d + vech_index(i, j, d)];
    }
  }
  for (int i = 0; i < d; ++i) {
    if (L_(i, i) < kDiagFloor) L_(i, i) = kDiagFloor;
  }
}

}  // namespace ssvb
