#include "vesselgen/cohort/encode.hpp"

#include "vesselgen/core/error.hpp"
#include "vesselgen/geometry/frames.hpp"

namespace vg::cohort {

Encoding encode_vessel(const VesselRecord& record, const BranchPreset& preset, const EncodeOptions& opt) {
  require(record.centerline.size() >= 2, "record has no centerline");
  const auto poly = geometry::fit_curve(geometry::resample_arc_length(record.centerline, preset.n));
  const Points* target = &record.surface.vertices;
  Points strided;
  if (opt.max_target_points > 0 && record.surface.vertices.size() > static_cast<std::size_t>(opt.max_target_points)) {
    const double step = static_cast<double>(record.surface.vertices.size()) / opt.max_target_points;
    for (int k = 0; k < opt.max_target_points; ++k)
      strided.push_back(record.surface.vertices[static_cast<std::size_t>(k * step)]);
    target = &strided;
  }
  auto fit = fitting::fit_radial_profile(poly, *target, preset.m, opt.fit);
  return {geometry::Latent{poly.points, std::move(fit.radii)}, std::move(fit.report)};
}

geometry::QuadMesh decode_vessel(const geometry::Latent& z, int res_u, int res_v) {
  const auto poly = geometry::make_polygon(z.control_points);
  const auto skel = geometry::build_skeleton(poly, static_cast<int>(z.radii.cols()));
  const auto grid = geometry::skeleton_points(skel, z.radii, poly.knots);
  return geometry::eval_mesh(grid, res_u, res_v);
}

geometry::QuadMesh decode_vessel(const geometry::Latent& z, const BranchPreset& preset) {
  return decode_vessel(z, preset.res_u, preset.res_v);
}

}  // namespace vg::cohort
