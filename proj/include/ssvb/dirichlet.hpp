#pragma once

#include "ssvb/family.hpp"

namespace ssvb {

// Dirichlet q(theta) = Dirichlet(c_1, ..., c_K) over the simplex. The flat
// parameter vector is psi = ln c, so unconstrained ascent steps keep the
// concentrations positive; score() therefore carries the chain-rule factor
// c_k on top of the plain d ln q / d c_k gradient.
class DirichletVariational final : public VariationalFamily {
 public:
  static constexpr double kConcentrationFloor = 1e-6;
  // Simplex samples are clamped this far from 0 so ln theta_k stays finite.
  static constexpr double kSimplexClamp = 1e-300;

  explicit DirichletVariational(Vec c);

  static DirichletVariational symmetric(int K, double c);

  int theta_dim() const override { return static_cast<int>(c_.size()); }
  int psi_dim() const override { return static_cast<int>(c_.size()); }

  const Vec& concentration() const { return c_; }
  double concentration_sum() const { return c_.sum(); }
  // E_q[theta_k] = c_k / sum(c)
  Vec mean() const { return c_ / c_.sum(); }
  // E_q[ln theta_k] = digamma(c_k) - digamma(sum(c))
  Vec expected_log() const;

  Vec psi() const override;

  Vec sample(Rng& rng) const override;
  double log_density(const Vec& theta) const override;
  Vec score(const Vec& theta) const override;
  double entropy() const override;

  void apply_step(const Vec& grad_psi, double rho) override;

  std::unique_ptr<VariationalFamily> clone() const override {
    return std::make_unique<DirichletVariational>(*this);
  }

 private:
  Vec c_;
};

// Gradient of ln Dirichlet(theta | c) with respect to the concentrations:
// d ln q / d c_k = digamma(sum c) - digamma(c_k) + ln theta_k.
// theta must be strictly interior to the simplex.
Vec dirichlet_score_c(const Vec& c, const Vec& theta);

// Exact marginal of one Dirichlet coordinate: theta_k ~ Beta(a, b) with
// a = c_k and b = sum_{i != k} c_i. Used for the per-coordinate estimators
// where all other simplex coordinates integrate out.
class BetaMarginal {
 public:
  BetaMarginal(const DirichletVariational& parent, int k);

  int coordinate() const { return k_; }
  double shape_a() const { return a_; }
  double shape_b() const { return b_; }
  const Vec& parent_concentration() const { return c_; }

  double sample(Rng& rng) const;
  double log_density(double theta_k) const;
  // E[ln theta_k] and E[ln(1 - theta_k)] under the marginal.
  double expected_log() const;
  double expected_log1m() const;

  // Gradient of ln Beta(theta_k | c_k, sum_{i!=k} c_i) with respect to the
  // full concentration vector c.
  Vec score_c(double theta_k) const;

 private:
  Vec c_;
  int k_;
  double a_, b_;
};

// Standalone form of BetaMarginal::score_c.
Vec beta_marginal_score(const Vec& c, int k, double theta_k);

// Gamma(shape, 1) variate with draws clamped away from exact zero; the
// building block shared by the Dirichlet and Beta samplers.
double sample_gamma(double shape, Rng& rng);

}  // namespace ssvb
