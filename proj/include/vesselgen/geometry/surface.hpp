#pragma once

#include <array>
#include <span>
#include <vector>

#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/bspline.hpp"
#include "vesselgen/geometry/frames.hpp"
#include "vesselgen/kernels/stencil.hpp"

namespace vg::geometry {

/// Surface control net s^i_j, closed in the radial (j) direction.
///
/// The radial direction uses an unclamped uniform B-spline. The net is padded to
/// m + 1 + d_v columns: [s_{m-1}, s_0, ..., s_{m-1}, s_0, ..., s_{d_v-1}], which with
/// knots {-d_v, ..., m+1+d_v}/m makes S(u,0) and S(u,1) coincide.
struct SurfaceControlGrid {
  int n = 0;
  int m = 0;
  int degree_u = 3;
  int degree_v = 3;
  Points points;                 // n*m row-major
  Points padded_points;          // n*(m+1+d_v)
  std::vector<double> weights;   // n*m, all 1 by default
  std::vector<double> padded_weights;
  KnotVector knots_u;
  KnotVector knots_v;

  int padded_cols() const { return m + 1 + degree_v; }
  const Vec3& at(int i, int j) const { return points[static_cast<std::size_t>(i * m + j)]; }
  const Vec3& padded(int i, int p) const { return padded_points[static_cast<std::size_t>(i * padded_cols() + p)]; }
};

/// Column of the unpadded net that padded column p repeats.
inline int wrap_column(int p, int m) { return (p - 1 + m) % m; }

/// Builds a grid from n*m control points with the periodic radial knot vector.
SurfaceControlGrid make_grid(Points points, int n, int m, const KnotVector& knots_u, int degree_v = 3,
                             std::vector<double> weights = {});

/// s^i_j = q_i + r^i_j w_{i,j}. Radii must be strictly positive.
SurfaceControlGrid skeleton_points(const VesselSkeleton& skel, const Matrix& radii, const KnotVector& knots_u,
                                   int degree_v = 3);

/// Rational tensor-product evaluation on the padded net; u, v in [0, 1].
Vec3 eval_surface(const SurfaceControlGrid& grid, double u, double v);

/// Linear map from the (unpadded) control net to the tensor sample grid us x vs
/// (sample index = iu * vs.size() + iv). Padding is folded back onto the net.
kernels::SurfaceStencil surface_stencil(const KnotVector& knots_u, int n, int m, int degree_v,
                                        std::span<const double> us, std::span<const double> vs,
                                        std::span<const double> weights = {});
/// Same map for scattered samples (us[k], vs[k]).
kernels::SurfaceStencil surface_stencil_pairs(const KnotVector& knots_u, int n, int m, int degree_v,
                                              std::span<const double> us, std::span<const double> vs,
                                              std::span<const double> weights = {});

/// Structured quad mesh, v-seam welded: res_u rows of res_v vertices.
struct QuadMesh {
  Points vertices;
  std::vector<std::array<int, 4>> quads;
  int res_u = 0;
  int res_v = 0;
};

/// u_k = k/(res_u-1), v_j = j/res_v (v = 1 is the welded seam).
std::vector<double> mesh_u_params(int res_u);
std::vector<double> mesh_v_params(int res_v);

/// Quad connectivity for a res_u x res_v welded lattice.
std::vector<std::array<int, 4>> lattice_quads(int res_u, int res_v);

QuadMesh eval_mesh(const SurfaceControlGrid& grid, int res_u, int res_v);

}  // namespace vg::geometry
