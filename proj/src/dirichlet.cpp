#include "ssvb/dirichlet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ssvb/special_functions.hpp"

namespace ssvb {

namespace {

void check_interior(double t, const char* fn) {
  if (!(t > 0.0) || !(t < 1.0)) {
    throw std::domain_error(std::string(fn) + ": theta on simplex boundary");
  }
}

}  // namespace

DirichletVariational::DirichletVariational(Vec c) : c_(std::move(c)) {
  if (c_.size() < 2) {
    throw std::invalid_argument("DirichletVariational: need K >= 2");
  }
  if (!c_.allFinite() || (c_.array() < kConcentrationFloor).any()) {
    throw std::invalid_argument(
        "DirichletVariational: concentrations below floor");
  }
}

DirichletVariational DirichletVariational::symmetric(int K, double c) {
  return DirichletVariational(Vec::Constant(K, c));
}

Vec DirichletVariational::expected_log() const {
  const double psi_sum = digamma(c_.sum());
  Vec out(c_.size());
  for (Eigen::Index k = 0; k < c_.size(); ++k) {
    out[k] = digamma(c_[k]) - psi_sum;
  }
  return out;
}

Vec DirichletVariational::psi() const { return c_.array().log(); }

double sample_gamma(double shape, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0);
  double x = gamma(rng);
  // Small shapes underflow to exact zero fairly often; clamp so downstream
  // logs stay finite.
  if (x < DirichletVariational::kSimplexClamp) {
    x = DirichletVariational::kSimplexClamp;
  }
  return x;
}

Vec DirichletVariational::sample(Rng& rng) const {
  const auto K = c_.size();
  Vec g(K);
  for (Eigen::Index k = 0; k < K; ++k) g[k] = sample_gamma(c_[k], rng);
  Vec theta = g / g.sum();
  for (Eigen::Index k = 0; k < K; ++k) {
    if (theta[k] < kSimplexClamp) theta[k] = kSimplexClamp;
    const double ceil = 1.0 - 1e-15;
    if (theta[k] > ceil) theta[k] = ceil;
  }
  return theta;
}

double DirichletVariational::log_density(const Vec& theta) const {
  const auto K = c_.size();
  if (theta.size() != K) {
    throw std::invalid_argument("DirichletVariational::log_density: bad size");
  }
  double out = ln_gamma(c_.sum());
  for (Eigen::Index k = 0; k < K; ++k) {
    check_interior(theta[k], "DirichletVariational::log_density");
    out += (c_[k] - 1.0) * std::log(theta[k]) - ln_gamma(c_[k]);
  }
  return out;
}

Vec dirichlet_score_c(const Vec& c, const Vec& theta) {
  if (theta.size() != c.size()) {
    throw std::invalid_argument("dirichlet_score_c: size mismatch");
  }
  const double psi_sum = digamma(c.sum());
  Vec out(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    check_interior(theta[k], "dirichlet_score_c");
    out[k] = psi_sum - digamma(c[k]) + std::log(theta[k]);
  }
  return out;
}

Vec DirichletVariational::score(const Vec& theta) const {
  // psi = ln c, so the score in psi coordinates is c .* (d ln q / d c).
  return c_.array() * dirichlet_score_c(c_, theta).array();
}

double DirichletVariational::entropy() const {
  const auto K = c_.size();
  const double c0 = c_.sum();
  double out = -ln_gamma(c0) + (c0 - static_cast<double>(K)) * digamma(c0);
  for (Eigen::Index k = 0; k < K; ++k) {
    out += ln_gamma(c_[k]) - (c_[k] - 1.0) * digamma(c_[k]);
  }
  return out;
}

void DirichletVariational::apply_step(const Vec& grad_psi, double rho) {
  if (grad_psi.size() != c_.size()) {
    throw std::invalid_argument("DirichletVariational::apply_step: bad size");
  }
  c_ = (c_.array().log() + rho * grad_psi.array()).exp();
  c_ = c_.array().max(kConcentrationFloor);
}

BetaMarginal::BetaMarginal(const DirichletVariational& parent, int k)
    : c_(parent.concentration()), k_(k) {
  if (k < 0 || k >= parent.theta_dim()) {
    throw std::invalid_argument("BetaMarginal: coordinate out of range");
  }
  a_ = c_[k_];
  b_ = c_.sum() - a_;
}

double BetaMarginal::sample(Rng& rng) const {
  const double x = sample_gamma(a_, rng);
  const double y = sample_gamma(b_, rng);
  double t = x / (x + y);
  if (t < DirichletVariational::kSimplexClamp) {
    t = DirichletVariational::kSimplexClamp;
  }
  const double ceil = 1.0 - 1e-15;
  if (t > ceil) t = ceil;
  return t;
}

double BetaMarginal::log_density(double t) const {
  check_interior(t, "BetaMarginal::log_density");
  return ln_gamma(a_ + b_) - ln_gamma(a_) - ln_gamma(b_) +
         (a_ - 1.0) * std::log(t) + (b_ - 1.0) * std::log1p(-t);
}

double BetaMarginal::expected_log() const {
  return digamma(a_) - digamma(a_ + b_);
}

double BetaMarginal::expected_log1m() const {
  return digamma(b_) - digamma(a_ + b_);
}

Vec BetaMarginal::score_c(double theta_k) const {
  return beta_marginal_score(c_, k_, theta_k);
}

Vec beta_marginal_score(const Vec& c, int k, double theta_k) {
  check_interior(theta_k, "beta_marginal_score");
  const double c0 = c.sum();
  const double a = c[k];
  const double b = c0 - a;
  const double psi_c0 = digamma(c0);
  const double off_diag = psi_c0 - digamma(b) + std::log1p(-theta_k);
  Vec out = Vec::Constant(c.size(), off_diag);
  out[k] = psi_c0 - digamma(a) + std::log(theta_k);
  return out;
}

}  // namespace ssvb
