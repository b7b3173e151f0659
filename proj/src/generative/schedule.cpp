#include "vesselgen/generative/schedule.hpp"

#include <cmath>
#include <string>

#include "vesselgen/core/error.hpp"

namespace vg::generative {

void NoiseSchedule::check_step(int tau) const {
  if (tau < 1 || tau > T) throw ValidationError("diffusion step " + std::to_string(tau) + " outside [1, T]");
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
  require(T >= 1, "schedule needs at least one step");
  require(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end, "betas must satisfy 0 < start <= end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.assign(static_cast<std::size_t>(T + 1), 0.0);
  s.alpha.assign(static_cast<std::size_t>(T + 1), 1.0);
  s.alpha_bar.assign(static_cast<std::size_t>(T + 1), 1.0);
  s.sigma.assign(static_cast<std::size_t>(T + 1), 0.0);
  for (int t = 1; t <= T; ++t) {
    const double b = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
    s.beta[t] = b;
    s.alpha[t] = 1.0 - b;
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.sigma[t] = std::sqrt((1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * b);
  }
  return s;
}

Json schedule_to_json(const NoiseSchedule& s) {
  return Json{{"T", s.T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}, {"kind", "linear"}};
}

NoiseSchedule schedule_from_json(const Json& j) {
  if (j.value("kind", std::string("linear")) != "linear") throw ValidationError("unknown schedule kind");
  return make_linear_schedule(j.at("T").get<int>(), j.at("beta_start").get<double>(), j.at("beta_end").get<double>());
}

Vector forward_diffuse(const NoiseSchedule& s, const Vector& x0, int tau, const Vector& eps) {
  s.check_step(tau);
  require(x0.size() == eps.size(), "latent and noise sizes differ");
  const double ab = s.alpha_bar[tau];
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Vector posterior_mean(const NoiseSchedule& s, const Vector& x_tau, int tau, const Vector& score) {
  if (tau != 0) s.check_step(tau);
  const double ab = s.alpha_bar[tau];
  return (x_tau + (1.0 - ab) * score) / std::sqrt(ab);
}

double ddpm_loss(const Matrix& eps, const Matrix& eps_hat) {
  require(eps.rows() == eps_hat.rows() && eps.cols() == eps_hat.cols() && eps.cols() > 0, "loss shapes differ");
  return (eps - eps_hat).squaredNorm() / static_cast<double>(eps.cols());
}

}  // namespace vg::generative
