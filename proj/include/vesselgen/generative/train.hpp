#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/generative/denoiser.hpp"
#include "vesselgen/generative/schedule.hpp"

namespace vg::generative {

struct TrainConfig {
  double learning_rate = 8e-5;
  int batch_size = 110;
  int epochs = 2000;
  double cond_dropout = 0.1;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  int steps_per_epoch = 0;  // 0: ceil(N / batch_size)
  double ema = 0.0;         // > 0: the net ends with an exponential moving average of its weights
};

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

struct TrainLog {
  std::vector<double> epoch_loss;
  std::string to_csv() const;
};

/// Simplified-loss training. data: N x dim, already normalized (rows are samples).
/// cond: N x cond_dim for conditional networks, dropped to the null token with
/// probability cond_dropout. TrainingError on a non-finite loss.
TrainLog train(DenoiserNet& net, const NoiseSchedule& schedule, const Matrix& data, const Matrix* cond,
               const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch = {});

}  // namespace vg::generative
