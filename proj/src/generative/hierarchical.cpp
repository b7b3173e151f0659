#include "vesselgen/generative/hierarchical.hpp"

#include <algorithm>
#include <cmath>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"
#include "vesselgen/fitting/chamfer.hpp"
#include "vesselgen/fitting/decoder.hpp"
#include "vesselgen/geometry/bspline.hpp"
#include "vesselgen/kernels/nearest.hpp"

namespace vg::generative {

Vector BranchModel::encode_centerline(PointSpan C) const {
  require(C.size() == static_cast<std::size_t>(n), "centerline size does not match the branch model");
  return cl_norm.normalize(flatten(C));
}

Points BranchModel::decode_centerline(const Vector& z) const { return unflatten(cl_norm.denormalize(z)); }

Vector BranchModel::encode_radii(const Matrix& R) const {
  require(R.rows() == n && R.cols() == m, "radial profile shape does not match the branch model");
  return rad_norm.normalize(flatten(R));
}

double BranchModel::radius_floor() const {
  double lo = rad_norm.lo.size() ? rad_norm.lo.minCoeff() : 1.0;
  return 1e-3 * std::max(lo, 1e-9);
}

Matrix BranchModel::decode_radii(const Vector& z) const {
  Matrix R = unflatten(rad_norm.denormalize(z), n, m);
  return R.cwiseMax(radius_floor());
}

Json branch_model_to_json(const BranchModel& m) {
  return Json{{"branch", m.branch},
              {"n", m.n},
              {"m", m.m},
              {"schedule", schedule_to_json(m.schedule)},
              {"centerline", m.centerline.to_json()},
              {"radii", m.radii.to_json()},
              {"normalization", {{"centerline", normalizer_to_json(m.cl_norm)}, {"radii", normalizer_to_json(m.rad_norm)}}},
              {"train_config", m.train_config}};
}

BranchModel branch_model_from_json(const Json& j) {
  BranchModel m;
  m.branch = j.at("branch").get<std::string>();
  m.n = j.at("n").get<int>();
  m.m = j.at("m").get<int>();
  m.schedule = schedule_from_json(j.at("schedule"));
  m.centerline = DenoiserNet::from_json(j.at("centerline"));
  m.radii = DenoiserNet::from_json(j.at("radii"));
  m.centerline.set_schedule(m.schedule);
  m.radii.set_schedule(m.schedule);
  m.cl_norm = normalizer_from_json(j.at("normalization").at("centerline"));
  m.rad_norm = normalizer_from_json(j.at("normalization").at("radii"));
  m.train_config = j.value("train_config", Json::object());
  require(m.centerline.config().dim == 3 * m.n && m.radii.config().dim == m.n * m.m, "checkpoint dimensions disagree");
  require(m.radii.config().cond_dim == 3 * m.n, "radii network must be conditioned on the centerline");
  return m;
}

void save_branch_model(const std::filesystem::path& path, const BranchModel& m) { write_json(path, branch_model_to_json(m), -1); }

BranchModel load_branch_model(const std::filesystem::path& path) { return branch_model_from_json(read_json(path)); }

Json branch_training_config_to_json(const BranchTrainingConfig& c) {
  return Json{{"centerline_net", denoiser_config_to_json(c.centerline_net)},
              {"radii_net", denoiser_config_to_json(c.radii_net)},
              {"train", train_config_to_json(c.train)},
              {"T", c.T}};
}

BranchTrainingConfig branch_training_config_from_json(const Json& j, BranchTrainingConfig c) {
  auto net = [](const Json& src, DenoiserConfig d) {
    d.hidden = src.value("hidden", d.hidden);
    d.layers = src.value("layers", d.layers);
    d.time_dim = src.value("time_dim", d.time_dim);
    d.cond_embed = src.value("cond_embed", d.cond_embed);
    d.output = src.value("output", d.output);
    return d;
  };
  if (j.contains("centerline_net")) c.centerline_net = net(j.at("centerline_net"), c.centerline_net);
  if (j.contains("radii_net")) c.radii_net = net(j.at("radii_net"), c.radii_net);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
  c.T = j.value("T", c.T);
  return c;
}

BranchModel train_branch_model(const std::string& branch, const std::vector<Points>& centerlines,
                               const std::vector<Matrix>& radii, const BranchTrainingConfig& cfg,
                               BranchTrainingLog* log, TrainComponent component, const BranchModel* base) {
  require(centerlines.size() >= 2 && centerlines.size() == radii.size(), "need at least two paired latents");
  require(component == TrainComponent::both || base != nullptr, "single-component training needs a base checkpoint");
  BranchModel model;
  model.branch = branch;
  model.n = static_cast<int>(centerlines.front().size());
  model.m = static_cast<int>(radii.front().cols());
  const auto N = static_cast<Eigen::Index>(centerlines.size());
  Matrix cl(N, 3 * model.n), rad(N, model.n * model.m);
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto& C = centerlines[static_cast<std::size_t>(k)];
    const auto& R = radii[static_cast<std::size_t>(k)];
    require(static_cast<int>(C.size()) == model.n && R.rows() == model.n && R.cols() == model.m,
            "latents of one branch must share (n, m)");
    cl.row(k) = flatten(C).transpose();
    rad.row(k) = flatten(R).transpose();
  }
  model.cl_norm = Normalizer::fit(cl);
  model.rad_norm = Normalizer::fit(rad);
  Matrix zc(N, cl.cols()), zr(N, rad.cols());
  for (Eigen::Index k = 0; k < N; ++k) {
    zc.row(k) = model.cl_norm.normalize(cl.row(k).transpose()).transpose();
    zr.row(k) = model.rad_norm.normalize(rad.row(k).transpose()).transpose();
  }
  model.schedule = make_linear_schedule(cfg.T);

  DenoiserConfig cnet = cfg.centerline_net;
  cnet.dim = 3 * model.n;
  cnet.cond_dim = 0;
  DenoiserConfig rnet = cfg.radii_net;
  rnet.dim = model.n * model.m;
  rnet.cond_dim = 3 * model.n;
  model.centerline = DenoiserNet(cnet, stream_seed(cfg.train.seed, 1));
  model.radii = DenoiserNet(rnet, stream_seed(cfg.train.seed, 2));
  model.centerline.set_schedule(model.schedule);
  model.radii.set_schedule(model.schedule);

  if (base) {
    require(base->n == model.n && base->m == model.m, "base checkpoint has a different latent size");
    require(base->schedule.T == model.schedule.T, "base checkpoint has a different schedule");
    if (component == TrainComponent::radii) model.centerline = base->centerline;
    if (component == TrainComponent::centerline) model.radii = base->radii;
  }

  // Each component draws from its own streams, so retraining one alone reproduces it.
  TrainConfig tc = cfg.train;
  TrainLog lc, lr;
  tc.seed = stream_seed(cfg.train.seed, 3);
  if (component != TrainComponent::radii) lc = train(model.centerline, model.schedule, zc, nullptr, tc);
  tc.seed = stream_seed(cfg.train.seed, 4);
  if (component != TrainComponent::centerline) lr = train(model.radii, model.schedule, zr, &zc, tc);
  if (log) {
    log->centerline = std::move(lc);
    log->radii = std::move(lr);
  }
  model.train_config = branch_training_config_to_json(cfg);
  return model;
}

Points PromptBundle::centerline_targets() const {
  Points out = points;
  for (const auto& c : contours) out.push_back(centroid(c));
  return out;
}

Points PromptBundle::surface_targets() const {
  Points out;
  for (const auto& c : contours) out.insert(out.end(), c.begin(), c.end());
  for (const auto& p : patches) out.insert(out.end(), p.begin(), p.end());
  return out;
}

TrainComponent train_component_from_string(const std::string& s) {
  if (s == "both") return TrainComponent::both;
  if (s == "cl" || s == "centerline") return TrainComponent::centerline;
  if (s == "rad" || s == "radii") return TrainComponent::radii;
  throw ValidationError("unknown component '" + s + "' (expected both, cl or rad)");
}

SurfaceLoss surface_loss_from_string(const std::string& s) {
  if (s == "projected") return SurfaceLoss::projected;
  if (s == "nearest") return SurfaceLoss::nearest;
  throw ValidationError("unknown surface loss '" + s + "' (projected or nearest)");
}

std::string to_string(SurfaceLoss l) { return l == SurfaceLoss::nearest ? "nearest" : "projected"; }

Json hierarchical_config_to_json(const HierarchicalConfig& c) {
  return Json{{"K", c.K},
              {"L", c.L},
              {"centerline", sampler_config_to_json(c.centerline)},
              {"radii", sampler_config_to_json(c.radii)},
              {"guide_res_u", c.guide_res_u},
              {"guide_res_v", c.guide_res_v},
              {"surface_loss", to_string(c.surface_loss)}};
}

HierarchicalConfig hierarchical_config_from_json(const Json& j, HierarchicalConfig c) {
  c.K = j.value("K", c.K);
  c.L = j.value("L", c.L);
  if (j.contains("centerline")) c.centerline = sampler_config_from_json(j.at("centerline"), c.centerline);
  if (j.contains("radii")) c.radii = sampler_config_from_json(j.at("radii"), c.radii);
  c.guide_res_u = j.value("guide_res_u", c.guide_res_u);
  c.guide_res_v = j.value("guide_res_v", c.guide_res_v);
  if (j.contains("surface_loss")) c.surface_loss = surface_loss_from_string(j.at("surface_loss").get<std::string>());
  return c;
}

std::vector<Points> sample_centerlines(const BranchModel& model, PointSpan targets, const SamplerConfig& cfg_in, int count,
                                       SampleStats* stats, std::uint64_t stream_offset) {
  require(count >= 1, "need at least one centerline");
  SamplerConfig cfg = cfg_in;
  cfg.batch = count;
  const auto params = [&] {
    std::vector<double> us(100);
    for (int k = 0; k < 100; ++k) us[static_cast<std::size_t>(k)] = k / 99.0;
    return us;
  }();
  const auto knots = geometry::KnotVector::averaged(geometry::uniform_params(model.n), 3);
  const Matrix Bm = geometry::basis_matrix(knots, params);  // 100 x n
  const Points tgt(targets.begin(), targets.end());

  Observation obs = [&](const Vector& z, int) {
    const Points C = model.decode_centerline(z);
    Points X(static_cast<std::size_t>(Bm.rows()), Vec3::Zero());
    for (Eigen::Index r = 0; r < Bm.rows(); ++r)
      for (int k = 0; k < model.n; ++k) X[static_cast<std::size_t>(r)] += Bm(r, k) * C[static_cast<std::size_t>(k)];
    Points gX;
    ObservationValue ov;
    ov.loss = fitting::one_sided_chamfer(tgt, X, &gX);
    Points gC(static_cast<std::size_t>(model.n), Vec3::Zero());
    for (Eigen::Index r = 0; r < Bm.rows(); ++r)
      for (int k = 0; k < model.n; ++k) gC[static_cast<std::size_t>(k)] += Bm(r, k) * gX[static_cast<std::size_t>(r)];
    ov.grad = (flatten(gC).array() * model.cl_norm.range.array()).matrix();
    return ov;
  };
  const Matrix Z = sample(model.centerline, model.schedule, cfg, nullptr, tgt.empty() ? nullptr : &obs, stats, stream_offset);
  std::vector<Points> out;
  for (int b = 0; b < count; ++b) out.push_back(model.decode_centerline(Z.col(b)));
  return out;
}

std::pair<std::vector<double>, std::vector<double>> match_surface_params(const fitting::NurbsDecoder& dec,
                                                                         const fitting::NurbsDecoder::State& state,
                                                                         const Matrix& R, PointSpan targets) {
  const int n = dec.n(), m = dec.m();
  const int su = std::max(8 * n, 64), sv = std::max(4 * m, 32);
  const auto us = geometry::mesh_u_params(su);
  const auto vs = geometry::mesh_v_params(sv);
  const Points dense = dec.samples_for(state, R, geometry::surface_stencil(dec.knots(), n, m, 3, us, vs));
  const auto hit = kernels::nearest(targets, dense);

  std::vector<double> pu(targets.size()), pv(targets.size());
  auto eval = [&](double u, double v) {
    const double uu = std::clamp(u, 0.0, 1.0);
    const double vv = v - std::floor(v);
    const auto st = geometry::surface_stencil_pairs(dec.knots(), n, m, 3, std::span(&uu, 1), std::span(&vv, 1));
    return dec.samples_for(state, R, st)[0];
  };
  const double h = 1e-5;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int idx = hit.index[k];
    double u = us[static_cast<std::size_t>(idx / sv)], v = vs[static_cast<std::size_t>(idx % sv)];
    for (int it = 0; it < 8; ++it) {
      const Vec3 r = eval(u, v) - targets[k];
      const double ul = std::max(0.0, u - h), uh = std::min(1.0, u + h);
      const Vec3 du = (eval(uh, v) - eval(ul, v)) / (uh - ul);
      const Vec3 dv = (eval(u, v + h) - eval(u, v - h)) / (2.0 * h);
      Eigen::Matrix2d JtJ;
      JtJ << du.dot(du), du.dot(dv), du.dot(dv), dv.dot(dv);
      const Eigen::Vector2d step = JtJ.ldlt().solve(Eigen::Vector2d(-du.dot(r), -dv.dot(r)));
      if (!step.allFinite()) break;
      // Stay within about one dense cell of the lattice hit.
      const double nu = std::clamp(u + std::clamp(step(0), -1.0 / su, 1.0 / su), 0.0, 1.0);
      const double nv = v + std::clamp(step(1), -1.0 / sv, 1.0 / sv);
      if ((eval(nu, nv) - targets[k]).squaredNorm() >= r.squaredNorm()) break;
      u = nu;
      v = nv;
    }
    pu[k] = u;
    pv[k] = v - std::floor(v);
  }
  return {pu, pv};
}

std::vector<Matrix> sample_radii(const BranchModel& model, PointSpan C, PointSpan targets, const SamplerConfig& cfg_in,
                                 int count, int guide_res_u, int guide_res_v, SampleStats* stats,
                                 std::uint64_t stream_offset, SurfaceLoss loss) {
  require(count >= 1, "need at least one radial profile");
  SamplerConfig cfg = cfg_in;
  cfg.batch = count;
  const Vector c = model.encode_centerline(C);
  const Matrix cond = c.replicate(1, count);
  const Points tgt(targets.begin(), targets.end());

  std::unique_ptr<fitting::NurbsDecoder> dec;
  fitting::NurbsDecoder::State state;
  kernels::SurfaceStencil matched;
  const double floor = model.radius_floor();
  if (!tgt.empty()) {
    dec = std::make_unique<fitting::NurbsDecoder>(model.n, model.m, guide_res_u, guide_res_v);
    state = dec->prepare(C);
    if (loss == SurfaceLoss::projected) {
      // A tube's closest point lies along the radial line, so matching against the mid-range
      // profile gives parameters that hold for the profiles the sampler visits.
      const Matrix mid = unflatten(model.rad_norm.denormalize(Vector::Constant(model.n * model.m, 0.5)), model.n,
                                   model.m)
                             .cwiseMax(floor);
      const auto [us, vs] = match_surface_params(*dec, state, mid, tgt);
      matched = geometry::surface_stencil_pairs(dec->knots(), model.n, model.m, 3, us, vs);
    }
  }
  Observation obs = [&](const Vector& z, int) {
    const Matrix raw = unflatten(model.rad_norm.denormalize(z), model.n, model.m);
    const Matrix R = raw.cwiseMax(floor);
    Points gX;
    ObservationValue ov;
    Matrix gR;
    if (loss == SurfaceLoss::projected) {
      const Points X = dec->samples_for(state, R, matched);
      gX.resize(X.size());
      double sum = 0.0;
      for (std::size_t k = 0; k < X.size(); ++k) {
        const Vec3 d = X[k] - tgt[k];
        sum += d.squaredNorm();
        gX[k] = 2.0 * d / static_cast<double>(X.size());
      }
      ov.loss = sum / static_cast<double>(X.size());
      gR = dec->pullback_radii(state, gX, matched);
    } else {
      const Points X = dec->samples_for(state, R);
      ov.loss = fitting::one_sided_chamfer(tgt, X, &gX);
      gR = dec->pullback_radii(state, gX);
    }
    for (int i = 0; i < model.n; ++i)
      for (int j = 0; j < model.m; ++j)
        if (raw(i, j) < floor) gR(i, j) = 0.0;
    ov.grad = (flatten(gR).array() * model.rad_norm.range.array()).matrix();
    return ov;
  };
  const Matrix Z = sample(model.radii, model.schedule, cfg, &cond, tgt.empty() ? nullptr : &obs, stats, stream_offset);
  std::vector<Matrix> out;
  for (int b = 0; b < count; ++b) out.push_back(model.decode_radii(Z.col(b)));
  return out;
}

HierarchicalSample sample_hierarchical(const BranchModel& model, const PromptBundle& prompts,
                                       const HierarchicalConfig& cfg) {
  require(cfg.K >= 1 && cfg.L >= 1, "hierarchical sampling needs K, L >= 1");
  for (const auto& c : prompts.contours) require(c.size() >= 3, "a contour prompt needs at least 3 points");
  HierarchicalSample out;
  out.L = cfg.L;
  SampleStats st;
  out.centerlines = sample_centerlines(model, prompts.centerline_targets(), cfg.centerline, cfg.K, &st);
  out.skipped_steps += st.skipped_steps;
  const Points surface = prompts.surface_targets();
  SamplerConfig rc = cfg.radii;
  rc.seed = stream_seed(cfg.radii.seed, 0x5EC0DE);
  for (int k = 0; k < cfg.K; ++k) {
    auto rs = sample_radii(model, out.centerlines[static_cast<std::size_t>(k)], surface, rc, cfg.L, cfg.guide_res_u,
                           cfg.guide_res_v, &st, static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(cfg.L),
                           cfg.surface_loss);
    out.skipped_steps += st.skipped_steps;
    for (auto& r : rs) out.radii.push_back(std::move(r));
  }
  return out;
}

}  // namespace vg::generative
