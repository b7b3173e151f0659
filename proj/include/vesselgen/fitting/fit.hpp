#pragma once

#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/bspline.hpp"

namespace vg::fitting {

struct FitConfig {
  int max_iters = 300;
  double step_size = 1.0;   // first trial step; later trials start from twice the last accepted one
  double tolerance = 1e-9;  // on the relative objective decrease of an accepted step
  double init_radius = 0.0; // <= 0: mean target distance to the centerline
  int res_u = 100;
  int res_v = 48;
};

struct FitReport {
  int iterations = 0;
  double final_value = 0.0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step, starting with the initial value
};

Json fit_report_to_json(const FitReport& r);

struct ProfileFit {
  Matrix radii;
  double init_radius = 0.0;
  FitReport report;
};

/// Mean distance from the target points to a densely sampled centerline.
double mean_distance_to_curve(const geometry::ControlPolygon& poly, PointSpan target);

/// Minimizes chamfer(B(C, R), target) over R by projected gradient descent with Armijo
/// backtracking. Radii stay above 1e-4 * init_radius.
ProfileFit fit_radial_profile(const geometry::ControlPolygon& poly, PointSpan target, int m, const FitConfig& cfg = {});

}  // namespace vg::fitting
