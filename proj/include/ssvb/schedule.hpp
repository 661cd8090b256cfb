#pragma once

namespace ssvb {

// Robbins-Monro step sizes rho_t = rho0 * (w + t)^(-eta). Any eta in
// (0.5, 1] with w >= 0 gives sum rho_t = inf and sum rho_t^2 < inf.
struct StepSchedule {
  double rho0 = 1.0;
  double w = 0.0;
  double eta = 1.0;

  // Throws std::invalid_argument outside the valid ranges.
  void validate() const;
  double step_size(int t) const;
};

}  // namespace ssvb
