#pragma once

#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"

namespace vg::generative {

/// Linear variance schedule. Arrays are indexed by step tau = 0..T; entry 0 is the
/// clean state (alpha_bar = 1, beta = 0).
struct NoiseSchedule {
  int T = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  /// Reverse-step standard deviation: sigma^2 = (1 - abar_{tau-1}) / (1 - abar_tau) * beta_tau,
  /// i.e. the variance of the q-posterior q(x_{tau-1} | x_tau, x_0). sigma_1 = 0.
  std::vector<double> sigma;

  void check_step(int tau) const;
};

NoiseSchedule make_linear_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 2e-2);

Json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const Json& j);

/// x_tau = sqrt(abar) x0 + sqrt(1 - abar) eps
Vector forward_diffuse(const NoiseSchedule& s, const Vector& x0, int tau, const Vector& eps);

/// Tweedie estimate x0 = (x_tau + (1 - abar) score) / sqrt(abar).
Vector posterior_mean(const NoiseSchedule& s, const Vector& x_tau, int tau, const Vector& score);

/// Mean over the batch of the summed squared epsilon error (columns are samples).
double ddpm_loss(const Matrix& eps, const Matrix& eps_hat);

}  // namespace vg::generative
