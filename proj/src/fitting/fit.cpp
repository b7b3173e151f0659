#include "vesselgen/fitting/fit.hpp"

#include <cmath>

#include "vesselgen/core/error.hpp"
#include "vesselgen/fitting/chamfer.hpp"
#include "vesselgen/fitting/decoder.hpp"
#include "vesselgen/kernels/nearest.hpp"

namespace vg::fitting {

Json fit_report_to_json(const FitReport& r) {
  return Json{{"iterations", r.iterations}, {"final_value", r.final_value}, {"converged", r.converged}};
}

double mean_distance_to_curve(const geometry::ControlPolygon& poly, PointSpan target) {
  require(!target.empty(), "target point set is empty");
  Points dense;
  const int count = 400;
  for (int k = 0; k < count; ++k) dense.push_back(geometry::eval_curve(poly, static_cast<double>(k) / (count - 1)));
  const auto nn = kernels::nearest(target, dense);
  double sum = 0.0;
  for (double d : nn.sq_dist) sum += std::sqrt(d);
  return sum / static_cast<double>(target.size());
}

ProfileFit fit_radial_profile(const geometry::ControlPolygon& poly, PointSpan target, int m, const FitConfig& cfg) {
  require(!target.empty(), "target point set is empty");
  require(cfg.max_iters >= 0 && cfg.step_size > 0.0 && cfg.tolerance > 0.0, "invalid fit configuration");
  const int n = poly.size();
  const NurbsDecoder dec(n, m, cfg.res_u, cfg.res_v, poly.degree);
  const auto state = dec.prepare(poly.points);
  const ChamferTarget tgt(Points(target.begin(), target.end()));

  ProfileFit out;
  out.init_radius = cfg.init_radius > 0.0 ? cfg.init_radius : mean_distance_to_curve(poly, target);
  require(out.init_radius > 0.0, "target coincides with the centerline");
  const double floor = 1e-4 * out.init_radius;
  Matrix R = Matrix::Constant(n, m, out.init_radius);

  auto value_of = [&](const Matrix& r, ChamferReport* rep, Points* xs) {
    Points x = dec.samples_for(state, r);
    ChamferReport c = chamfer(x, tgt);
    const double v = c.value;
    if (rep) *rep = std::move(c);
    if (xs) *xs = std::move(x);
    return v;
  };

  ChamferReport rep;
  Points xs;
  double f = value_of(R, &rep, &xs);
  out.report.history.push_back(f);
  double step = cfg.step_size;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Matrix g = dec.pullback_radii(state, chamfer_gradient(rep, xs, tgt.points()));
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0)) {
      out.report.converged = true;
      break;
    }
    step *= 2.0;
    bool accepted = false;
    double f_new = f;
    Matrix R_new;
    for (int ls = 0; ls < 60; ++ls) {
      R_new = (R - step * g).cwiseMax(floor);
      // Armijo on the projected step
      const double decrease = (g.array() * (R - R_new).array()).sum();
      f_new = value_of(R_new, nullptr, nullptr);
      if (f_new <= f - 1e-4 * decrease && decrease > 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.report.converged = true;  // no descent left at machine precision
      break;
    }
    const double rel = (f - f_new) / std::max(f, 1e-300);
    R = R_new;
    f = value_of(R, &rep, &xs);
    out.report.history.push_back(f);
    if (rel < cfg.tolerance) {
      out.report.converged = true;
      ++it;
      break;
    }
  }
  out.radii = R;
  out.report.iterations = it;
  out.report.final_value = f;
  if (!std::isfinite(f)) throw FitError("radial profile fit produced a non-finite objective");
  return out;
}

}  // namespace vg::fitting
