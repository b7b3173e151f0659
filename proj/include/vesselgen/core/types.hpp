#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace vg {

using Vec3 = Eigen::Vector3d;
using Points = std::vector<Vec3>;
using PointSpan = std::span<const Vec3>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Row-major flattening of a point list into [x0 y0 z0 x1 ...].
inline Vector flatten(PointSpan pts) {
  Vector out(static_cast<Eigen::Index>(pts.size() * 3));
  for (std::size_t i = 0; i < pts.size(); ++i) out.segment<3>(static_cast<Eigen::Index>(3 * i)) = pts[i];
  return out;
}

inline Points unflatten(const Eigen::Ref<const Vector>& v) {
  Points out(static_cast<std::size_t>(v.size() / 3));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.segment<3>(static_cast<Eigen::Index>(3 * i));
  return out;
}

/// Row-major flattening of an n x m matrix.
inline Vector flatten(const Matrix& m) {
  Vector out(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i * m.cols() + j) = m(i, j);
  return out;
}

inline Matrix unflatten(const Eigen::Ref<const Vector>& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  return out;
}

inline Vec3 centroid(PointSpan pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return pts.empty() ? c : Vec3(c / static_cast<double>(pts.size()));
}

}  // namespace vg
