#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/io.hpp"
#include "vesselgen/geometry/surface.hpp"

namespace vg::cohort {

inline constexpr std::array<const char*, 9> kBiomarkerNames = {"PA", "PT", "PD", "LPD", "h",
                                                               "w",  "h_over_w", "tortuosity", "radius_sd"};

/// Landmark conventions:
///  PA, PD  mean section radius at 10% and 90% of the centerline arc length
///  PT      mean section radius at the apex, the point farthest from the inlet-outlet chord
///  h       apex distance to that chord
///  w       distance between the points at height h/2 on either side of the apex
///  LPD     arc length from the inlet to PD
///  radius_sd  population standard deviation of the per-section mean radii
/// A centerline without an apex (h = 0) reports w = h_over_w = 0 and PT at mid-length.
struct BiomarkerTable {
  double PA = 0, PT = 0, PD = 0, LPD = 0, h = 0, w = 0, h_over_w = 0, tortuosity = 0, radius_sd = 0;

  std::array<double, 9> values() const { return {PA, PT, PD, LPD, h, w, h_over_w, tortuosity, radius_sd}; }
};

/// From a dense centerline and per-section mean radii located at arc-length fractions.
BiomarkerTable biomarkers(PointSpan centerline, std::span<const double> section_fraction,
                          std::span<const double> section_radius);
/// Latent path: the curve sampled at 400 parameters, radii from the profile rows.
BiomarkerTable biomarkers(const geometry::Latent& z);
/// Mesh path: lattice row centroids and mean distances to them.
BiomarkerTable biomarkers(const geometry::QuadMesh& mesh);

std::string biomarkers_to_csv(const std::vector<BiomarkerTable>& rows, const std::vector<std::string>& ids = {});

struct MarkerComparison {
  std::string name;
  double median_a = 0, iqr_a = 0, median_b = 0, iqr_b = 0;
  double ks = 0;  // two-sample Kolmogorov-Smirnov statistic
};

/// Requires at least five tables per side.
std::vector<MarkerComparison> compare_distributions(const std::vector<BiomarkerTable>& a,
                                                    const std::vector<BiomarkerTable>& b);
Json comparison_to_json(const std::vector<MarkerComparison>& c);
std::string comparison_to_csv(const std::vector<MarkerComparison>& c);

/// sup |F_a - F_b| over the pooled sample.
double ks_statistic(std::vector<double> a, std::vector<double> b);
/// Linear-interpolated quantile of unsorted data.
double quantile(std::vector<double> x, double q);

}  // namespace vg::cohort
