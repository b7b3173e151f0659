#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"
#include "vesselgen/generative/schedule.hpp"

namespace vg::generative {

struct DenoiserConfig {
  int dim = 0;         // latent size
  int cond_dim = 0;    // 0: unconditional network
  int hidden = 256;
  int layers = 4;      // residual blocks
  int time_dim = 64;
  int cond_embed = 64;
  // "eps": the head is the noise estimate. "x0": the head estimates the clean latent and
  // the noise follows as (x - sqrt(ab) head) / sqrt(1 - ab), which needs a schedule.
  std::string output = "eps";
};

Json denoiser_config_to_json(const DenoiserConfig& c);
DenoiserConfig denoiser_config_from_json(const Json& j);

/// Sinusoidal features of the step index.
Vector time_embedding(int tau, int dim);

/// Residual MLP predicting the injected noise:
///   h0 = W_in [x; emb(tau); e_c] + b_in,  h <- h + W_l silu(h) + b_l,  out = W_out silu(h) + b_out
/// with e_c = silu(W_c c + b_c) for a condition c, or a learned null token.
/// Batches are column-major: one sample per column.
class DenoiserNet {
 public:
  DenoiserNet() = default;
  DenoiserNet(const DenoiserConfig& cfg, std::uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }
  bool conditional() const { return cfg_.cond_dim > 0; }
  bool predicts_x0() const { return cfg_.output == "x0"; }
  /// Required before use when the head estimates x0.
  void set_schedule(const NoiseSchedule& s) { alpha_bar_ = s.alpha_bar; }

  /// Forward pass intermediates kept for backpropagation.
  struct Tape {
    Matrix input;
    std::vector<Matrix> h;  // layers + 1 pre-activation states
    Matrix cond_pre;        // W_c c + b_c, columns of null-token samples unused
    std::vector<char> use_cond;
    const Matrix* cond = nullptr;
    std::vector<int> taus;
  };

  /// cond: cond_dim x B or null. use_cond: per column, false selects the null token; an
  /// empty mask means every column is conditioned when cond is given.
  Matrix forward(const Matrix& X, std::span<const int> taus, const Matrix* cond, std::span<const char> use_cond,
                 Tape* tape) const;

  Matrix predict(const Matrix& X, int tau, const Matrix* cond = nullptr) const;

  /// Backpropagates dL/d(output); accumulates parameter gradients (same layout as
  /// parameters()) when grads is given and returns dL/dX.
  Matrix backward(const Tape& tape, const Matrix& grad_out, std::vector<Matrix>* grads) const;

  std::vector<Matrix>& parameters() { return params_; }
  const std::vector<Matrix>& parameters() const { return params_; }
  std::vector<Matrix> zero_gradients() const;

  Json to_json() const;
  static DenoiserNet from_json(const Json& j);

 private:
  double alpha_bar_at(int tau) const;
  int idx_out() const { return 2 + 2 * cfg_.layers; }
  int idx_cond() const { return 4 + 2 * cfg_.layers; }

  DenoiserConfig cfg_;
  std::vector<Matrix> params_;
  std::vector<double> alpha_bar_;
};

/// Adam with global-norm gradient clipping.
class Adam {
 public:
  Adam(const std::vector<Matrix>& params, double lr, double clip = 1.0, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  /// Returns the pre-clipping gradient norm.
  double step(std::vector<Matrix>& params, std::vector<Matrix>& grads);

 private:
  double lr_, clip_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace vg::generative
