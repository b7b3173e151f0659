#pragma once

#include <array>
#include <span>
#include <vector>

#include "vesselgen/core/types.hpp"

namespace vg::geometry {

inline constexpr int kMaxDegree = 7;

/// Non-decreasing knot sequence together with the spline degree it serves.
struct KnotVector {
  std::vector<double> values;
  int degree = 3;
  bool clamped = true;

  /// Clamped knots from interpolation parameters by knot averaging.
  static KnotVector averaged(std::span<const double> params, int degree);
  /// Unclamped uniform knots for a closed loop of m points:
  /// {-d*du, ..., (m+1+d)*du}, du = 1/m.
  static KnotVector periodic(int m, int degree);

  int control_count() const { return static_cast<int>(values.size()) - degree - 1; }
  double domain_begin() const { return values[static_cast<std::size_t>(degree)]; }
  double domain_end() const { return values[values.size() - static_cast<std::size_t>(degree) - 1]; }

  /// Throws ValidationError for decreasing or too short sequences.
  void validate() const;
  /// Index k with values[k] <= u < values[k+1], restricted to the valid span range.
  int find_span(double u) const;
};

/// The at most degree+1 basis functions that are nonzero at u: N_{start+k}(u) = values[k].
struct BasisValues {
  int start = 0;
  int count = 0;
  std::array<double, kMaxDegree + 1> values{};
};

/// Values and first derivatives of the nonzero basis functions.
struct BasisDerivatives {
  int start = 0;
  int count = 0;
  std::array<double, kMaxDegree + 1> values{};
  std::array<double, kMaxDegree + 1> first{};
};

BasisValues basis_functions(double u, const KnotVector& knots);
BasisDerivatives basis_derivatives(double u, const KnotVector& knots);

/// Parameters k/(n-1), k = 0..n-1.
std::vector<double> uniform_params(int n);

/// Centerline latent: control points, degree, knots and the interpolation parameters.
struct ControlPolygon {
  Points points;
  int degree = 3;
  KnotVector knots;
  std::vector<double> params;

  int size() const { return static_cast<int>(points.size()); }
};

/// Wraps existing control points (e.g. a sampled latent) with the standard
/// uniform-parameter / averaged-knot construction.
ControlPolygon make_polygon(Points control_points, int degree = 3);

/// Interpolating fit: one control point per sample, curve(params[k]) = samples[k].
ControlPolygon fit_curve(PointSpan samples, int degree = 3);

Vec3 eval_curve(const ControlPolygon& poly, double u);
Vec3 eval_curve_derivative(const ControlPolygon& poly, double u);

/// Normalized first derivatives; DegenerateError on a zero-length derivative.
Points tangents(const ControlPolygon& poly, std::span<const double> params);

/// Dense basis matrix M (params x control points) so that curve points = M * C.
Matrix basis_matrix(const KnotVector& knots, std::span<const double> params);
Matrix derivative_matrix(const KnotVector& knots, std::span<const double> params);

/// Resamples a polyline to `count` points equally spaced in arc length.
Points resample_arc_length(PointSpan polyline, int count);

double polyline_length(PointSpan polyline);

}  // namespace vg::geometry
