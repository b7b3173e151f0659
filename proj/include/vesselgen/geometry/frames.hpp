#pragma once

#include <span>
#include <vector>

#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/bspline.hpp"

namespace vg::geometry {

/// Rodrigues rotation of v about the unit axis by `angle` radians (right-handed:
/// counterclockwise when looking along -axis).
Vec3 rotate(const Vec3& v, const Vec3& axis, double angle);

/// Normalized t0 x chord. When the cross product is shorter than 1e-9 the chord is
/// replaced by the coordinate axis on which t0 has the smallest magnitude.
/// DegenerateError if t0 itself is zero.
Vec3 initial_radial_direction(const Vec3& t0, const Vec3& chord);
/// Same, with t0 the start tangent and chord = last - first control point.
Vec3 initial_radial_direction(const ControlPolygon& poly);

/// One unit loop of `o` points per section, in the plane orthogonal to the tangent and
/// ordered clockwise about it. The first point of loop i lies along the projection of
/// `reference` onto that plane.
struct ContourStack {
  std::vector<Points> loops;
  Points first_axis;   // unit in-plane vector of point 0 (a_i)
  Points second_axis;  // t_i x a_i
  Points reference_projection;  // unnormalized projection that produced a_i
  std::vector<bool> used_fallback;
};

ContourStack unit_contours(PointSpan centers, PointSpan tangents, const Vec3& reference, int o);

/// Result of the iterative index-shift alignment across sections.
struct FrameAlignment {
  Points frame_w;             // aligned reference vector per section
  std::vector<int> shifts;    // l* per section (shifts[0] = 0)
  std::vector<int> indices;   // j^{i,*}
};

/// Chooses, section by section, the cyclic shift l that minimizes the summed distance
/// between consecutive contour points, and follows the chosen contour index from
/// section 0 (the point best aligned with w0). Ties go to the smaller shift / index.
FrameAlignment align_radial_frames(std::span<const Points> contours, PointSpan centers, const Vec3& w0);

/// Directions w_{i,j} = rotate(w_i, t_i, j * 2pi/m); returns n*m vectors, row-major.
Points radial_directions(PointSpan tangents, PointSpan frame_w, int m);

/// Cross-section centers, tangents and the aligned radial direction grid.
struct VesselSkeleton {
  Points centers;
  Points tangents;
  Points frame_w;
  Points directions;  // n*m, row-major (section i, direction j)
  int n = 0;
  int m = 0;
  double delta_theta = 0.0;

  const Vec3& direction(int i, int j) const { return directions[static_cast<std::size_t>(i * m + j)]; }
};

/// Intermediate quantities of skeleton construction, kept for derivative propagation.
struct SkeletonTrace {
  Points derivatives;  // unnormalized dC/du at the section parameters
  Vec3 w0_cross = Vec3::Zero();  // t0 x chord (or fallback) before normalization
  bool w0_fallback = false;
  int w0_fallback_axis = -1;
  ContourStack contours;
  FrameAlignment alignment;
};

/// Full skeleton construction from a centerline polygon with m radial directions.
/// Sections sit at the polygon's interpolation parameters.
VesselSkeleton build_skeleton(const ControlPolygon& poly, int m, SkeletonTrace* trace = nullptr);

/// Same construction from precomputed section centers and unnormalized derivatives.
VesselSkeleton build_skeleton(PointSpan centers, PointSpan derivatives, const Vec3& chord, int m,
                              SkeletonTrace* trace = nullptr);

}  // namespace vg::geometry
