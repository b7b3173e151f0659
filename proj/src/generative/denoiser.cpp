#include "vesselgen/generative/denoiser.hpp"

#include <cmath>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"

namespace vg::generative {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix silu(const Matrix& x) {
  return x.unaryExpr([](double v) { return v * sigmoid(v); });
}

Matrix silu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double s = sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

Matrix random_matrix(Rng& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix w(rows, cols);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = d(rng);
  return w;
}

}  // namespace

Json denoiser_config_to_json(const DenoiserConfig& c) {
  return Json{{"dim", c.dim},       {"cond_dim", c.cond_dim}, {"hidden", c.hidden},
              {"layers", c.layers}, {"time_dim", c.time_dim}, {"cond_embed", c.cond_embed}, {"output", c.output}};
}

DenoiserConfig denoiser_config_from_json(const Json& j) {
  DenoiserConfig c;
  c.dim = j.at("dim").get<int>();
  c.cond_dim = j.value("cond_dim", 0);
  c.hidden = j.value("hidden", 256);
  c.layers = j.value("layers", 4);
  c.time_dim = j.value("time_dim", 64);
  c.cond_embed = j.value("cond_embed", 64);
  c.output = j.value("output", std::string("eps"));
  require(c.output == "eps" || c.output == "x0", "denoiser output must be eps or x0");
  return c;
}

Vector time_embedding(int tau, int dim) {
  Vector e(dim);
  const int half = dim / 2;
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    e(k) = std::sin(tau * freq);
    e(half + k) = std::cos(tau * freq);
  }
  if (dim % 2) e(dim - 1) = 0.0;
  return e;
}

DenoiserNet::DenoiserNet(const DenoiserConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  require(cfg.dim >= 1 && cfg.hidden >= 1 && cfg.layers >= 0 && cfg.time_dim >= 2, "invalid denoiser shape");
  require(cfg.cond_dim >= 0, "condition size must be non-negative");
  require(cfg.output == "eps" || cfg.output == "x0", "denoiser output must be eps or x0");
  Rng rng = make_rng(seed, 0xD0);
  const int in = cfg.dim + cfg.time_dim + (cfg.cond_dim > 0 ? cfg.cond_embed : 0);
  params_.push_back(random_matrix(rng, cfg.hidden, in, 1.0 / std::sqrt(in)));
  params_.push_back(Matrix::Zero(cfg.hidden, 1));
  const double res_scale = 1.0 / std::sqrt(cfg.hidden * std::max(1, cfg.layers));
  for (int l = 0; l < cfg.layers; ++l) {
    params_.push_back(random_matrix(rng, cfg.hidden, cfg.hidden, res_scale));
    params_.push_back(Matrix::Zero(cfg.hidden, 1));
  }
  // Zero output layer: the untrained net predicts no noise.
  params_.push_back(Matrix::Zero(cfg.dim, cfg.hidden));
  params_.push_back(Matrix::Zero(cfg.dim, 1));
  if (cfg.cond_dim > 0) {
    params_.push_back(random_matrix(rng, cfg.cond_embed, cfg.cond_dim, 1.0 / std::sqrt(cfg.cond_dim)));
    params_.push_back(Matrix::Zero(cfg.cond_embed, 1));
    params_.push_back(Matrix::Zero(cfg.cond_embed, 1));  // null token
  }
}

Matrix DenoiserNet::forward(const Matrix& X, std::span<const int> taus, const Matrix* cond,
                            std::span<const char> use_cond, Tape* tape) const {
  const Eigen::Index B = X.cols();
  require(X.rows() == cfg_.dim, "denoiser input has the wrong latent size");
  require(static_cast<Eigen::Index>(taus.size()) == B, "one step index per column required");
  const bool has_cond = conditional();
  const int ce = has_cond ? cfg_.cond_embed : 0;
  Matrix input(cfg_.dim + cfg_.time_dim + ce, B);
  input.topRows(cfg_.dim) = X;
  for (Eigen::Index b = 0; b < B; ++b) {
    if (b > 0 && taus[b] == taus[b - 1])
      input.col(b).segment(cfg_.dim, cfg_.time_dim) = input.col(b - 1).segment(cfg_.dim, cfg_.time_dim);
    else
      input.col(b).segment(cfg_.dim, cfg_.time_dim) = time_embedding(taus[b], cfg_.time_dim);
  }

  Matrix cond_pre;
  std::vector<char> mask;
  if (has_cond) {
    mask.assign(static_cast<std::size_t>(B), 0);
    if (cond) {
      require(cond->rows() == cfg_.cond_dim && cond->cols() == B, "condition matrix has the wrong shape");
      if (use_cond.empty())
        mask.assign(static_cast<std::size_t>(B), 1);
      else {
        require(static_cast<Eigen::Index>(use_cond.size()) == B, "condition mask has the wrong length");
        mask.assign(use_cond.begin(), use_cond.end());
      }
      cond_pre = (params_[idx_cond()] * *cond).colwise() + params_[idx_cond() + 1].col(0);
    }
    const Matrix emb = cond ? silu(cond_pre) : Matrix();
    for (Eigen::Index b = 0; b < B; ++b)
      input.col(b).tail(ce) = mask[static_cast<std::size_t>(b)] ? Vector(emb.col(b)) : Vector(params_[idx_cond() + 2].col(0));
  }

  std::vector<Matrix> hs;
  hs.reserve(static_cast<std::size_t>(cfg_.layers + 1));
  hs.push_back((params_[0] * input).colwise() + params_[1].col(0));
  for (int l = 0; l < cfg_.layers; ++l) {
    const Matrix& h = hs.back();
    hs.push_back(h + ((params_[2 + 2 * l] * silu(h)).colwise() + params_[3 + 2 * l].col(0)));
  }
  Matrix out = (params_[idx_out()] * silu(hs.back())).colwise() + params_[idx_out() + 1].col(0);
  if (predicts_x0()) {
    for (Eigen::Index b = 0; b < B; ++b) {
      const double ab = alpha_bar_at(taus[b]);
      out.col(b) = (X.col(b) - std::sqrt(ab) * out.col(b)) / std::sqrt(1.0 - ab);
    }
  }
  if (tape) {
    tape->taus.assign(taus.begin(), taus.end());
    tape->input = std::move(input);
    tape->h = std::move(hs);
    tape->cond_pre = std::move(cond_pre);
    tape->use_cond = std::move(mask);
    tape->cond = cond;
  }
  return out;
}

Matrix DenoiserNet::predict(const Matrix& X, int tau, const Matrix* cond) const {
  const std::vector<int> taus(static_cast<std::size_t>(X.cols()), tau);
  return forward(X, taus, cond, {}, nullptr);
}

std::vector<Matrix> DenoiserNet::zero_gradients() const {
  std::vector<Matrix> g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Matrix::Zero(p.rows(), p.cols()));
  return g;
}

double DenoiserNet::alpha_bar_at(int tau) const {
  require(!alpha_bar_.empty(), "x0 head used without a noise schedule");
  require(tau >= 1 && tau < static_cast<int>(alpha_bar_.size()), "step index outside the schedule");
  return alpha_bar_[static_cast<std::size_t>(tau)];
}

Matrix DenoiserNet::backward(const Tape& tape, const Matrix& grad_out, std::vector<Matrix>* grads) const {
  const int L = cfg_.layers;
  Matrix G = grad_out;
  Matrix d_skip;
  if (predicts_x0()) {
    d_skip.resize(G.rows(), G.cols());
    for (Eigen::Index b = 0; b < G.cols(); ++b) {
      const double ab = alpha_bar_at(tape.taus[static_cast<std::size_t>(b)]);
      d_skip.col(b) = G.col(b) / std::sqrt(1.0 - ab);
      G.col(b) *= -std::sqrt(ab / (1.0 - ab));
    }
  }
  const Matrix a_last = silu(tape.h.back());
  if (grads) {
    (*grads)[idx_out()] += G * a_last.transpose();
    (*grads)[idx_out() + 1] += G.rowwise().sum();
  }
  Matrix dh = (params_[idx_out()].transpose() * G).cwiseProduct(silu_grad(tape.h.back()));
  for (int l = L - 1; l >= 0; --l) {
    const Matrix& h = tape.h[static_cast<std::size_t>(l)];
    const Matrix& W = params_[2 + 2 * l];
    if (grads) {
      (*grads)[2 + 2 * l] += dh * silu(h).transpose();
      (*grads)[3 + 2 * l] += dh.rowwise().sum();
    }
    dh = dh + (W.transpose() * dh).cwiseProduct(silu_grad(h));
  }
  if (grads) {
    (*grads)[0] += dh * tape.input.transpose();
    (*grads)[1] += dh.rowwise().sum();
  }
  const Matrix d_in = params_[0].transpose() * dh;
  if (conditional() && grads) {
    const int ce = cfg_.cond_embed;
    const Matrix d_emb = d_in.bottomRows(ce);
    const Eigen::Index B = G.cols();
    Matrix d_pre = Matrix::Zero(ce, B);
    bool any = false;
    for (Eigen::Index b = 0; b < B; ++b) {
      if (tape.use_cond[static_cast<std::size_t>(b)]) {
        d_pre.col(b) = d_emb.col(b).cwiseProduct(silu_grad(tape.cond_pre.col(b)));
        any = true;
      } else {
        (*grads)[idx_cond() + 2] += d_emb.col(b);
      }
    }
    if (any) {
      (*grads)[idx_cond()] += d_pre * tape.cond->transpose();
      (*grads)[idx_cond() + 1] += d_pre.rowwise().sum();
    }
  }
  if (predicts_x0()) return d_in.topRows(cfg_.dim) + d_skip;
  return d_in.topRows(cfg_.dim);
}

Json DenoiserNet::to_json() const {
  Json ps = Json::array();
  for (const auto& p : params_) ps.push_back(vg::to_json(p));
  return Json{{"config", denoiser_config_to_json(cfg_)}, {"parameters", ps}};
}

DenoiserNet DenoiserNet::from_json(const Json& j) {
  DenoiserNet net(denoiser_config_from_json(j.at("config")), 0);
  const auto& ps = j.at("parameters");
  require(ps.size() == net.params_.size(), "checkpoint parameter count does not match the architecture");
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Matrix m = matrix_from_json(ps[k]);
    require(m.rows() == net.params_[k].rows() && m.cols() == net.params_[k].cols(), "checkpoint tensor shape mismatch");
    net.params_[k] = std::move(m);
  }
  return net;
}

Adam::Adam(const std::vector<Matrix>& params, double lr, double clip, double beta1, double beta2, double eps)
    : lr_(lr), clip_(clip), b1_(beta1), b2_(beta2), eps_(eps) {
  require(lr > 0.0, "learning rate must be positive");
  for (const auto& p : params) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

double Adam::step(std::vector<Matrix>& params, std::vector<Matrix>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix g = scale * grads[k];
    m_[k] = b1_ * m_[k] + (1.0 - b1_) * g;
    v_[k] = b2_ * v_[k] + (1.0 - b2_) * g.cwiseAbs2();
    params[k].array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
  return norm;
}

}  // namespace vg::generative
