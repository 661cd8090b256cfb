#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>

namespace ssvb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// A variational distribution q(theta | psi) with a flat parameter vector psi.
// Families are value types; the const operations are pure and safe to call
// concurrently. apply_step is the single mutating entry point and must keep
// the parameters inside the family's feasible set.
class VariationalFamily {
 public:
  virtual ~VariationalFamily() = default;

  virtual int theta_dim() const = 0;
  virtual int psi_dim() const = 0;

  virtual Vec psi() const = 0;

  virtual Vec sample(Rng& rng) const = 0;
  virtual double log_density(const Vec& theta) const = 0;
  // Gradient of ln q(theta|psi) with respect to psi.
  virtual Vec score(const Vec& theta) const = 0;
  virtual double entropy() const = 0;

  // psi <- psi + rho * grad_psi, projected back into the feasible set.
  virtual void apply_step(const Vec& grad_psi, double rho) = 0;

  virtual std::unique_ptr<VariationalFamily> clone() const = 0;
};

}  // namespace ssvb
