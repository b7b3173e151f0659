#pragma once

#include <vector>

#include "vesselgen/core/types.hpp"

namespace vg::kernels {

/// For each query point: index of the closest reference point and the squared distance.
/// Ties resolve to the smallest reference index in every implementation.
struct NearestResult {
  std::vector<int> index;
  std::vector<double> sq_dist;
};

/// `nearest` uses the grid once queries x references reaches this many pairs and the
/// reference set has at least kGridMinRefs points; brute force below.
inline constexpr std::size_t kGridPairThreshold = std::size_t{1} << 21;
inline constexpr std::size_t kGridMinRefs = 64;

inline bool prefer_grid(std::size_t queries, std::size_t refs) {
  return refs >= kGridMinRefs && queries * refs >= kGridPairThreshold;
}

NearestResult nearest_serial(PointSpan queries, PointSpan refs);
NearestResult nearest_parallel(PointSpan queries, PointSpan refs);

/// Exact nearest neighbours through a uniform grid over the reference points.
class GridIndex {
 public:
  explicit GridIndex(PointSpan refs);
  /// Returns {index, squared distance}.
  std::pair<int, double> query(const Vec3& q) const;
  std::size_t size() const { return refs_.size(); }
  const Points& points() const { return refs_; }

 private:
  long cell_of(int axis, double x) const;
  void scan_cell(long ix, long iy, long iz, const Vec3& q, int& best, double& best_sq) const;

  Points refs_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  long dims_[3] = {1, 1, 1};
  std::vector<int> offsets_;
  std::vector<int> items_;
};

NearestResult nearest_grid(PointSpan queries, PointSpan refs);
/// Queries against a prebuilt index (reused when the reference set is fixed).
NearestResult nearest_grid(PointSpan queries, const GridIndex& grid);

/// Brute force or grid according to prefer_grid().
NearestResult nearest(PointSpan queries, PointSpan refs);

}  // namespace vg::kernels
