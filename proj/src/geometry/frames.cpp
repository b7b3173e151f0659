#include "vesselgen/geometry/frames.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vesselgen/core/error.hpp"

namespace vg::geometry {

namespace {

constexpr double kCrossFloor = 1e-9;
constexpr double kProjectionFloor = 1e-6;

int least_aligned_axis(const Vec3& t) {
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(t(k)) < std::abs(t(axis))) axis = k;
  return axis;
}

}  // namespace

Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * v + s * axis.cross(v) + (1.0 - c) * axis.dot(v) * axis;
}

Vec3 initial_radial_direction(const Vec3& t0, const Vec3& chord) {
  if (!(t0.norm() > 0.0)) throw DegenerateError("zero start tangent");
  Vec3 x = t0.cross(chord);
  if (x.norm() < kCrossFloor) {
    const Vec3 t = t0.normalized();
    x = t.cross(Vec3::Unit(least_aligned_axis(t)));
  }
  return x.normalized();
}

Vec3 initial_radial_direction(const ControlPolygon& poly) {
  const Vec3 d0 = eval_curve_derivative(poly, 0.0);
  if (!(d0.norm() > 1e-14)) throw DegenerateError("zero start tangent");
  return initial_radial_direction(Vec3(d0.normalized()), poly.points.back() - poly.points.front());
}

ContourStack unit_contours(PointSpan centers, PointSpan tangents, const Vec3& reference, int o) {
  require(centers.size() == tangents.size(), "centers/tangents size mismatch");
  require(o >= 3, "contours need at least 3 points");
  ContourStack out;
  const std::size_t n = centers.size();
  out.loops.resize(n);
  out.first_axis.resize(n);
  out.second_axis.resize(n);
  out.reference_projection.resize(n);
  out.used_fallback.assign(n, false);
  const double step = 2.0 * kPi / o;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& t = tangents[i];
    Vec3 proj = reference - reference.dot(t) * t;
    if (proj.norm() < kProjectionFloor) {
      const Vec3 axis = Vec3::Unit(least_aligned_axis(t));
      proj = axis - axis.dot(t) * t;
      out.used_fallback[i] = true;
    }
    out.reference_projection[i] = proj;
    const Vec3 a = proj.normalized();
    const Vec3 b = t.cross(a);
    out.first_axis[i] = a;
    out.second_axis[i] = b;
    auto& loop = out.loops[i];
    loop.resize(static_cast<std::size_t>(o));
    for (int j = 0; j < o; ++j)  // clockwise about t: rotation by -j*step
      loop[static_cast<std::size_t>(j)] = centers[i] + std::cos(j * step) * a - std::sin(j * step) * b;
  }
  return out;
}

FrameAlignment align_radial_frames(std::span<const Points> contours, PointSpan centers, const Vec3& w0) {
  require(!contours.empty(), "no contours to align");
  require(contours.size() == centers.size(), "contour/center count mismatch");
  const std::size_t o = contours[0].size();
  require(o >= 1, "empty contour");
  for (const auto& c : contours)
    require(c.size() == o, "all contours must have the same point count");

  FrameAlignment out;
  const std::size_t n = contours.size();
  out.frame_w.resize(n);
  out.shifts.assign(n, 0);
  out.indices.assign(n, 0);

  // Section 0: the contour point whose radial vector is most aligned with w0.
  int best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < o; ++j) {
    const Vec3 r = (contours[0][j] - centers[0]).normalized();
    const double d = r.dot(w0);
    if (d > best_dot) {
      best_dot = d;
      best = static_cast<int>(j);
    }
  }
  out.indices[0] = best;
  out.frame_w[0] = w0.normalized();

  for (std::size_t i = 1; i < n; ++i) {
    int best_shift = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < o; ++l) {
      double d = 0.0;
      for (std::size_t j = 0; j < o; ++j) d += (contours[i - 1][j] - contours[i][(j + l) % o]).norm();
      if (d < best_d) {
        best_d = d;
        best_shift = static_cast<int>(l);
      }
    }
    const int idx = static_cast<int>((static_cast<std::size_t>(out.indices[i - 1]) + static_cast<std::size_t>(best_shift)) % o);
    out.shifts[i] = best_shift;
    out.indices[i] = idx;
    const Vec3 r = contours[i][static_cast<std::size_t>(idx)] - centers[i];
    const double len = r.norm();
    if (!(len > 0.0)) throw DegenerateError("contour point coincides with its center at section " + std::to_string(i));
    out.frame_w[i] = r / len;
  }
  return out;
}

Points radial_directions(PointSpan tangents, PointSpan frame_w, int m) {
  require(m >= 3, "radial count m must be at least 3");
  require(tangents.size() == frame_w.size(), "tangent/frame count mismatch");
  const double step = 2.0 * kPi / m;
  Points out;
  out.reserve(tangents.size() * static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < tangents.size(); ++i)
    for (int j = 0; j < m; ++j) out.push_back(rotate(frame_w[i], tangents[i], j * step));
  return out;
}

VesselSkeleton build_skeleton(PointSpan centers, PointSpan derivatives, const Vec3& chord, int m,
                              SkeletonTrace* trace) {
  require(m >= 3, "radial count m must be at least 3");
  require(centers.size() == derivatives.size() && centers.size() >= 2, "skeleton needs matching centers/derivatives");
  VesselSkeleton skel;
  skel.n = static_cast<int>(centers.size());
  skel.m = m;
  skel.delta_theta = 2.0 * kPi / m;
  skel.centers.assign(centers.begin(), centers.end());
  skel.tangents.resize(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double len = derivatives[i].norm();
    if (!(len > 1e-14)) throw DegenerateError("zero-length centerline derivative at section " + std::to_string(i));
    skel.tangents[i] = derivatives[i] / len;
  }

  const Vec3& t0 = skel.tangents[0];
  Vec3 cross = t0.cross(chord);
  bool fallback = false;
  int axis = -1;
  if (cross.norm() < kCrossFloor) {
    axis = least_aligned_axis(t0);
    cross = t0.cross(Vec3::Unit(axis));
    fallback = true;
  }
  const Vec3 w0 = cross.normalized();

  ContourStack contours = unit_contours(skel.centers, skel.tangents, w0, m);
  FrameAlignment alignment = align_radial_frames(contours.loops, skel.centers, w0);
  skel.frame_w = alignment.frame_w;
  skel.directions = radial_directions(skel.tangents, skel.frame_w, m);

  if (trace) {
    trace->derivatives.assign(derivatives.begin(), derivatives.end());
    trace->w0_cross = cross;
    trace->w0_fallback = fallback;
    trace->w0_fallback_axis = axis;
    trace->contours = std::move(contours);
    trace->alignment = std::move(alignment);
  }
  return skel;
}

VesselSkeleton build_skeleton(const ControlPolygon& poly, int m, SkeletonTrace* trace) {
  Points centers, derivs;
  centers.reserve(poly.params.size());
  derivs.reserve(poly.params.size());
  for (double u : poly.params) {
    centers.push_back(eval_curve(poly, u));
    derivs.push_back(eval_curve_derivative(poly, u));
  }
  return build_skeleton(centers, derivs, poly.points.back() - poly.points.front(), m, trace);
}

}  // namespace vg::geometry
