#pragma once

#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/cohort/record.hpp"
#include "vesselgen/fitting/fit.hpp"
#include "vesselgen/geometry/io.hpp"

namespace vg::cohort {

struct EncodeOptions {
  fitting::FitConfig fit;
  int max_target_points = 0;  // > 0: fit against an evenly strided subset of the surface
};

struct Encoding {
  geometry::Latent latent;
  fitting::FitReport report;
};

/// Arc-length resampling of the centerline to n points, interpolating fit, then the
/// radial-profile fit against the surface.
Encoding encode_vessel(const VesselRecord& record, const BranchPreset& preset, const EncodeOptions& opt = {});

/// Surface mesh of a latent at the preset resolution (res_u, res_v overridable).
geometry::QuadMesh decode_vessel(const geometry::Latent& z, int res_u, int res_v);
geometry::QuadMesh decode_vessel(const geometry::Latent& z, const BranchPreset& preset);

}  // namespace vg::cohort
