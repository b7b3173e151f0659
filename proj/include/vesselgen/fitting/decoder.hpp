#pragma once

#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/bspline.hpp"
#include "vesselgen/geometry/frames.hpp"
#include "vesselgen/geometry/surface.hpp"
#include "vesselgen/kernels/stencil.hpp"

namespace vg::fitting {

/// The composed map (C, R) -> surface samples on a res_u x res_v lattice, with reverse
/// accumulation. Discrete choices (alignment shifts, fallback axes) are recorded by
/// forward() and held fixed by the pullback.
class NurbsDecoder {
 public:
  NurbsDecoder(int n, int m, int res_u, int res_v, int degree = 3);

  struct State {
    Points control;
    Matrix radii;
    geometry::VesselSkeleton skeleton;
    geometry::SkeletonTrace trace;
    Points net;      // s^i_j, n*m
    Points samples;  // res_u*res_v
  };

  struct Gradient {
    Points control;
    Matrix radii;
  };

  State forward(PointSpan control, const Matrix& radii) const;
  /// Skeleton only; reuse it with samples_for() when C is fixed and only R changes.
  State prepare(PointSpan control) const;
  /// Samples for new radii on an existing skeleton (X is linear in R there).
  Points samples_for(const State& state, const Matrix& radii) const;
  /// Same, at the samples of another stencil over this decoder's control net.
  Points samples_for(const State& state, const Matrix& radii, const kernels::SurfaceStencil& st) const;

  Gradient pullback(const State& state, PointSpan cotangent) const;
  /// Radii part only; cheaper since C is untouched.
  Matrix pullback_radii(const State& state, PointSpan cotangent) const;
  Matrix pullback_radii(const State& state, PointSpan cotangent, const kernels::SurfaceStencil& st) const;

  geometry::QuadMesh mesh(const State& state) const;

  int n() const { return n_; }
  int m() const { return m_; }
  int res_u() const { return res_u_; }
  int res_v() const { return res_v_; }
  const geometry::KnotVector& knots() const { return knots_; }
  const kernels::SurfaceStencil& stencil() const { return stencil_; }

 private:
  int n_, m_, res_u_, res_v_, degree_;
  geometry::KnotVector knots_;
  Matrix basis_;       // N(ū_i) rows, n x n
  Matrix derivative_;  // N'(ū_i) rows
  kernels::SurfaceStencil stencil_;
};

}  // namespace vg::fitting
