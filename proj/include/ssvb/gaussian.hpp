#pragma once

#include "ssvb/family.hpp"

namespace ssvb {

// Full-covariance Gaussian q(theta) = Normal(mu, L L^T) parameterized by the
// mean and the lower-triangular factor of the covariance. The flat parameter
// vector is psi = [mu, vech(L)] with vech stacking the lower triangle column
// by column; gradient steps act on the factor directly, which keeps the
// covariance positive definite as long as diag(L) stays above the floor.
class GaussianVariational final : public VariationalFamily {
 public:
  static constexpr double kDiagFloor = 1e-8;

  GaussianVariational(Vec mu, Mat L);

  static GaussianVariational standard(int dim);
  // Isotropic start: mu = 0, L = scale * I.
  static GaussianVariational isotropic(int dim, double scale);

  int theta_dim() const override { return static_cast<int>(mu_.size()); }
  int psi_dim() const override;

  const Vec& mean() const { return mu_; }
  const Mat& factor() const { return L_; }
  Mat covariance() const { return L_ * L_.transpose(); }

  Vec psi() const override;

  Vec sample(Rng& rng) const override;
  double log_density(const Vec& theta) const override;
  Vec score(const Vec& theta) const override;
  double entropy() const override;

  void apply_step(const Vec& grad_psi, double rho) override;

  std::unique_ptr<VariationalFamily> clone() const override {
    return std::make_unique<GaussianVariational>(*this);
  }

  // Index of element (i, j), i >= j, inside vech(L).
  static int vech_index(int i, int j, int d);
  // Packs [grad_mu, tril(grad_L)] into the psi layout.
  static Vec pack_gradient(const Vec& grad_mu, const Mat& grad_L);

 private:
  Vec mu_;
  Mat L_;  // lower triangular, diag >= kDiagFloor
};

}  // namespace ssvb
