#pragma once

#include <functional>
#include <optional>

#include "ssvb/estimator.hpp"
#include "ssvb/family.hpp"

namespace ssvb {

// A control variate bound to one state of q: the pointwise evaluation, the
// closed-form expectation and its gradient with respect to psi. fixed_scale
// pins the scaling a instead of estimating it from pilot draws.
struct ControlVariate {
  ThetaFn g;
  double expected_value = 0.0;
  Vec expected_grad;
  std::optional<double> fixed_scale;
};

// Objective split into the intractable term f with expectation estimated by
// stochastic search, the tractable remainder h with analytic gradient, and
// an optional control-variate factory rebuilt at the current q every
// iteration (expansion points and auxiliary parameters track q).
struct ObjectiveSplit {
  ThetaFn f;
  std::function<double(const VariationalFamily&)> h;
  std::function<Vec(const VariationalFamily&)> h_grad;
  std::function<ControlVariate(const VariationalFamily&)> make_cv;

  bool has_cv() const { return static_cast<bool>(make_cv); }
};

// Corrected gradient estimate for grad_psi E_q[f] at the given scale over
// fresh draws (builds the control variate at q, evaluates the batch, applies
// the Eq.-12-shaped correction).
Vec cv_gradient(const ObjectiveSplit& split, const VariationalFamily& q,
                double a_hat, const std::vector<Vec>& samples);

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long sample_count = 0;
};

// Monte Carlo estimate of the objective: h(q) + mean_s f(theta^(s)). The
// standard error covers the MC part only (h is exact).
ElboEstimate mc_elbo(const ObjectiveSplit& split, const VariationalFamily& q,
                     long sample_count, Rng& rng);

}  // namespace ssvb
