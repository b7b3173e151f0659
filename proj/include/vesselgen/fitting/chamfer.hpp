#pragma once

#include <memory>
#include <vector>

#include "vesselgen/core/types.hpp"
#include "vesselgen/kernels/nearest.hpp"

namespace vg::fitting {

/// Bidirectional Chamfer distance: mean squared distance from X to its nearest point in G
/// plus the same from G to X.
struct ChamferReport {
  double value = 0.0;
  double forward_term = 0.0;   // X -> G
  double backward_term = 0.0;  // G -> X
  std::vector<int> forward_index;   // nearest G index per X point
  std::vector<int> backward_index;  // nearest X index per G point
};

/// A fixed reference set with its search structure built once.
class ChamferTarget {
 public:
  explicit ChamferTarget(Points points);
  const Points& points() const { return points_; }
  kernels::NearestResult nearest_to(PointSpan queries) const;

 private:
  Points points_;
  std::shared_ptr<const kernels::GridIndex> grid_;
};

ChamferReport chamfer(PointSpan X, PointSpan G);
ChamferReport chamfer(PointSpan X, const ChamferTarget& G);

/// Gradient of the Chamfer value with respect to X, pairings held fixed.
Points chamfer_gradient(const ChamferReport& report, PointSpan X, PointSpan G);

/// One-sided term: mean over G of the squared distance to the nearest X point. The
/// gradient with respect to X is written to grad_x when given.
double one_sided_chamfer(PointSpan G, PointSpan X, Points* grad_x = nullptr);

}  // namespace vg::fitting
