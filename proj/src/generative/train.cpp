#include "vesselgen/generative/train.hpp"

#include <cmath>
#include <sstream>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"

namespace vg::generative {

Json train_config_to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
              {"cond_dropout", c.cond_dropout},   {"grad_clip", c.grad_clip},   {"seed", c.seed},
              {"steps_per_epoch", c.steps_per_epoch}, {"ema", c.ema}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.cond_dropout = j.value("cond_dropout", c.cond_dropout);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.seed = j.value("seed", c.seed);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.ema = j.value("ema", c.ema);
  return c;
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) os << e + 1 << ',' << epoch_loss[e] << '\n';
  return os.str();
}

TrainLog train(DenoiserNet& net, const NoiseSchedule& schedule, const Matrix& data, const Matrix* cond,
               const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch) {
  const Eigen::Index N = data.rows();
  const int D = net.config().dim;
  require(N >= 1, "training set is empty");
  require(data.cols() == D, "training data width does not match the network");
  require(cfg.learning_rate > 0.0 && cfg.batch_size >= 1 && cfg.epochs >= 0, "invalid training configuration");
  require(cfg.cond_dropout >= 0.0 && cfg.cond_dropout < 1.0, "conditional dropout must lie in [0, 1)");
  require(cfg.ema >= 0.0 && cfg.ema < 1.0, "EMA decay must lie in [0, 1)");
  if (net.conditional()) {
    require(cond && cond->rows() == N && cond->cols() == net.config().cond_dim, "conditional training needs N x cond_dim conditions");
  }

  Rng rng = make_rng(cfg.seed, 0x7A);
  std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
  std::uniform_int_distribution<int> step(1, schedule.T);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Adam opt(net.parameters(), cfg.learning_rate, cfg.grad_clip);
  const int B = cfg.batch_size;
  const int steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : static_cast<int>((N + B - 1) / B);

  TrainLog log;
  Matrix X(D, B), E(D, B), C;
  if (net.conditional()) C.resize(net.config().cond_dim, B);
  std::vector<int> taus(static_cast<std::size_t>(B));
  std::vector<char> mask(static_cast<std::size_t>(B));
  DenoiserNet::Tape tape;
  std::vector<Matrix> avg;
  if (cfg.ema > 0.0) avg = net.parameters();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      for (int b = 0; b < B; ++b) {
        const Eigen::Index i = pick(rng);
        const int tau = step(rng);
        taus[static_cast<std::size_t>(b)] = tau;
        for (int d = 0; d < D; ++d) E(d, b) = normal(rng);
        const double ab = schedule.alpha_bar[static_cast<std::size_t>(tau)];
        X.col(b) = std::sqrt(ab) * data.row(i).transpose() + std::sqrt(1.0 - ab) * E.col(b);
        if (net.conditional()) {
          C.col(b) = cond->row(i).transpose();
          mask[static_cast<std::size_t>(b)] = unit(rng) >= cfg.cond_dropout ? 1 : 0;
        }
      }
      const Matrix pred = net.forward(X, taus, net.conditional() ? &C : nullptr, mask, &tape);
      const double loss = ddpm_loss(E, pred);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", step " +
                            std::to_string(s + 1));
      sum += loss;
      auto grads = net.zero_gradients();
      net.backward(tape, 2.0 * (pred - E) / static_cast<double>(B), &grads);
      opt.step(net.parameters(), grads);
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] = cfg.ema * avg[k] + (1.0 - cfg.ema) * net.parameters()[k];
    }
    log.epoch_loss.push_back(sum / steps);
    if (on_epoch) on_epoch(epoch + 1, log.epoch_loss.back());
  }
  if (!avg.empty()) net.parameters() = std::move(avg);
  return log;
}

}  // namespace vg::generative
