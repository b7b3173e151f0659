#include "vesselgen/generative/sampler.hpp"

#include <cmath>
#include <iostream>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"

namespace vg::generative {

GuidanceNorm guidance_norm_from_string(const std::string& s) {
  if (s == "by_value") return GuidanceNorm::by_value;
  if (s == "by_norm") return GuidanceNorm::by_norm;
  if (s == "gaussian") return GuidanceNorm::gaussian;
  if (s == "gaussian_inflated") return GuidanceNorm::gaussian_inflated;
  throw ValidationError("unknown guidance normalization '" + s + "'");
}

std::string to_string(GuidanceNorm g) {
  switch (g) {
    case GuidanceNorm::by_value: return "by_value";
    case GuidanceNorm::by_norm: return "by_norm";
    case GuidanceNorm::gaussian: return "gaussian";
    case GuidanceNorm::gaussian_inflated: return "gaussian_inflated";
  }
  return "by_value";
}

Json sampler_config_to_json(const SamplerConfig& c) {
  return Json{{"gamma", c.gamma},         {"batch", c.batch},         {"seed", c.seed},
              {"dps_sigma", c.dps_sigma}, {"dps_scale", c.dps_scale}, {"guidance_norm", to_string(c.norm)}};
}

SamplerConfig sampler_config_from_json(const Json& j, SamplerConfig c) {
  c.gamma = j.value("gamma", c.gamma);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.dps_sigma = j.value("dps_sigma", c.dps_sigma);
  c.dps_scale = j.value("dps_scale", c.dps_scale);
  if (j.contains("guidance_norm")) c.norm = guidance_norm_from_string(j.at("guidance_norm").get<std::string>());
  return c;
}

Matrix cfg_epsilon(const DenoiserNet& net, const Matrix& X, int tau, const Matrix* cond, double gamma) {
  const Matrix eu = net.predict(X, tau, nullptr);
  if (!cond || gamma == 0.0 || !net.conditional()) return eu;
  const Matrix ec = net.predict(X, tau, cond);
  return (1.0 - gamma) * eu + gamma * ec;
}

Matrix cfg_score(const DenoiserNet& net, const NoiseSchedule& schedule, const Matrix& X, int tau, const Matrix* cond,
                 double gamma) {
  schedule.check_step(tau);
  return -cfg_epsilon(net, X, tau, cond, gamma) / std::sqrt(1.0 - schedule.alpha_bar[static_cast<std::size_t>(tau)]);
}

Matrix NetworkNoiseModel::eps(const Matrix& X, int tau, const Matrix* cond, int slot) {
  taus_.assign(static_cast<std::size_t>(X.cols()), tau);
  return net_.forward(X, taus_, cond, {}, &tapes_[slot]);
}

Matrix NetworkNoiseModel::vjp(int slot, const Matrix& G) { return net_.backward(tapes_[slot], G, nullptr); }

Matrix sample(const DenoiserNet& net, const NoiseSchedule& schedule, const SamplerConfig& cfg, const Matrix* cond,
              const Observation* observation, SampleStats* stats, std::uint64_t stream_offset) {
  NetworkNoiseModel model(net);
  return sample(model, schedule, cfg, cond, observation, stats, stream_offset);
}

Matrix sample(NoiseModel& model, const NoiseSchedule& schedule, const SamplerConfig& cfg, const Matrix* cond,
              const Observation* observation, SampleStats* stats, std::uint64_t stream_offset) {
  require(cfg.batch >= 1, "sampling batch must be at least 1");
  require(cfg.gamma >= 0.0, "guidance weight must be non-negative");
  require(cfg.dps_sigma > 0.0, "likelihood std must be positive");
  const int D = model.dim();
  const int B = cfg.batch;
  if (cond) require(cond->rows() == model.cond_dim() && cond->cols() == B, "condition matrix has the wrong shape");
  const bool guided = cond && model.cond_dim() > 0 && cfg.gamma != 0.0;

  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) rngs.push_back(make_rng(cfg.seed, stream_offset + static_cast<std::uint64_t>(b)));
  Matrix X(D, B);
  for (int b = 0; b < B; ++b) fill_normal(rngs[static_cast<std::size_t>(b)], X.col(b));

  if (stats) {
    stats->skipped_steps = 0;
    stats->final_loss.assign(static_cast<std::size_t>(B), 0.0);
  }
  Vector z(D);
  for (int tau = schedule.T; tau >= 1; --tau) {
    const auto t = static_cast<std::size_t>(tau);
    const double ab = schedule.alpha_bar[t], a = schedule.alpha[t], beta = schedule.beta[t];
    Matrix eps = model.eps(X, tau, nullptr, 0);
    if (guided) eps = (1.0 - cfg.gamma) * eps + cfg.gamma * model.eps(X, tau, cond, 1);
    Matrix score = -eps / std::sqrt(1.0 - ab);
    // Residual-normalized guidance is a per-step displacement; the Gaussian modes enter the score.
    Matrix displacement;

    if (observation) {
      // DPS: L(x0_hat(x)), x0_hat = (x - sqrt(1-abar) eps(x)) / sqrt(abar)
      const Matrix x0 = (X - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
      Matrix G = Matrix::Zero(D, B);
      std::vector<double> loss(static_cast<std::size_t>(B), 0.0);
      std::vector<char> ok(static_cast<std::size_t>(B), 1);
#pragma omp parallel for schedule(dynamic, 1)
      for (int b = 0; b < B; ++b) {
        ObservationValue ov;
        try {
          ov = (*observation)(x0.col(b), b);
        } catch (const std::exception&) {
          // A posterior-mean estimate too wild to decode; treated like a non-finite gradient.
          ok[static_cast<std::size_t>(b)] = 0;
          continue;
        }
        if (!std::isfinite(ov.loss) || ov.grad.size() != D || !ov.grad.allFinite()) {
          ok[static_cast<std::size_t>(b)] = 0;
          continue;
        }
        loss[static_cast<std::size_t>(b)] = ov.loss;
        G.col(b) = ov.grad;
      }
      Matrix vjp = model.vjp(0, G);
      if (guided) vjp = (1.0 - cfg.gamma) * vjp + cfg.gamma * model.vjp(1, G);
      const Matrix grad_x = (G - std::sqrt(1.0 - ab) * vjp) / std::sqrt(ab);
      displacement = Matrix::Zero(D, B);
      for (int b = 0; b < B; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (ok[bi] && !grad_x.col(b).allFinite()) ok[bi] = 0;
        if (!ok[bi]) {
          if (stats) ++stats->skipped_steps;
          std::cerr << "warning: skipped guidance (non-finite or undecodable estimate) at step " << tau << " for element " << b << '\n';
          continue;
        }
        if (stats) stats->final_loss[bi] = loss[bi];
        switch (cfg.norm) {
          case GuidanceNorm::gaussian:
            score.col(b) -= grad_x.col(b) / (2.0 * cfg.dps_sigma * cfg.dps_sigma);
            break;
          case GuidanceNorm::gaussian_inflated:
            score.col(b) -= grad_x.col(b) / (2.0 * (cfg.dps_sigma * cfg.dps_sigma + 1.0 - ab));
            break;
          case GuidanceNorm::by_value:
            displacement.col(b) = -cfg.dps_scale * grad_x.col(b) / (loss[bi] + 1e-6);
            break;
          case GuidanceNorm::by_norm:
            displacement.col(b) = -cfg.dps_scale * grad_x.col(b) / (std::sqrt(loss[bi]) + 1e-6);
            break;
        }
      }
    }

    X = (X + beta * score) / std::sqrt(a);
    if (displacement.size()) X += displacement;
    if (tau > 1) {
      const double sigma = schedule.sigma[t];
      for (int b = 0; b < B; ++b) {
        fill_normal(rngs[static_cast<std::size_t>(b)], z);
        X.col(b) += sigma * z;
      }
    }
  }
  return X;
}

}  // namespace vg::generative
