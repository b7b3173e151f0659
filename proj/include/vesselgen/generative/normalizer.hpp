#pragma once

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"

namespace vg::generative {

/// Per-dimension affine map of the training range onto [0, 1]. Constant dimensions
/// use a unit range so they stay finite.
struct Normalizer {
  Vector lo;
  Vector range;

  /// rows = samples
  static Normalizer fit(const Matrix& data);

  Vector normalize(const Vector& x) const;
  Vector denormalize(const Vector& z) const;
  Eigen::Index dim() const { return lo.size(); }
};

Json normalizer_to_json(const Normalizer& n);
Normalizer normalizer_from_json(const Json& j);

}  // namespace vg::generative
