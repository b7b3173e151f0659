#include "vesselgen/generative/normalizer.hpp"

#include "vesselgen/core/error.hpp"

namespace vg::generative {

Normalizer Normalizer::fit(const Matrix& data) {
  require(data.rows() >= 1 && data.cols() >= 1, "cannot normalize an empty dataset");
  Normalizer n;
  n.lo = data.colwise().minCoeff().transpose();
  const Vector hi = data.colwise().maxCoeff().transpose();
  n.range = hi - n.lo;
  for (Eigen::Index k = 0; k < n.range.size(); ++k)
    if (!(n.range(k) > 0.0)) n.range(k) = 1.0;
  return n;
}

Vector Normalizer::normalize(const Vector& x) const {
  require(x.size() == lo.size(), "normalizer dimension mismatch");
  return ((x - lo).array() / range.array()).matrix();
}

Vector Normalizer::denormalize(const Vector& z) const {
  require(z.size() == lo.size(), "normalizer dimension mismatch");
  return (z.array() * range.array()).matrix() + lo;
}

Json normalizer_to_json(const Normalizer& n) { return Json{{"lo", to_json(n.lo)}, {"range", to_json(n.range)}}; }

Normalizer normalizer_from_json(const Json& j) {
  Normalizer n;
  n.lo = vector_from_json(j.at("lo"));
  n.range = vector_from_json(j.at("range"));
  require(n.lo.size() == n.range.size(), "normalizer bounds differ in length");
  return n;
}

}  // namespace vg::generative
