#include "vesselgen/cohort/branching.hpp"

#include <algorithm>
#include <cmath>

#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/geometry/frames.hpp"
#include "vesselgen/kernels/nearest.hpp"

namespace vg::cohort {

baselines::GaussianModel fit_branching(const std::vector<BranchTopology>& topologies) {
  require(topologies.size() >= 2, "branching statistics need at least two topologies");
  Matrix E(static_cast<Eigen::Index>(topologies.size()), 4);
  for (std::size_t k = 0; k < topologies.size(); ++k)
    for (int i = 0; i < 4; ++i) E(static_cast<Eigen::Index>(k), i) = topologies[k].e[static_cast<std::size_t>(i)];
  return baselines::fit_gaussian(E);
}

std::vector<BranchTopology> sample_branching(const baselines::GaussianModel& model, int count, std::uint64_t seed,
                                             int* clamped) {
  require(model.dim() == 4, "branching model must be four-dimensional");
  const Matrix draws = baselines::sample_gaussian(model, count, seed);
  std::vector<BranchTopology> out(static_cast<std::size_t>(count));
  int hits = 0;
  for (int k = 0; k < count; ++k)
    for (int i = 0; i < 4; ++i) {
      const double v = draws(k, i);
      const double c = std::clamp(v, kBranchClampLo, kBranchClampHi);
      hits += c != v;
      out[static_cast<std::size_t>(k)].e[static_cast<std::size_t>(i)] = c;
    }
  if (clamped) *clamped = hits;
  return out;
}

namespace {

Points row_centroids(const geometry::QuadMesh& mesh) {
  require(mesh.res_u >= 2 && mesh.res_v >= 3 &&
              mesh.vertices.size() == static_cast<std::size_t>(mesh.res_u) * static_cast<std::size_t>(mesh.res_v),
          "assembly needs lattice meshes");
  Points c;
  for (int i = 0; i < mesh.res_u; ++i)
    c.push_back(centroid(PointSpan(mesh.vertices).subspan(static_cast<std::size_t>(i * mesh.res_v),
                                                          static_cast<std::size_t>(mesh.res_v))));
  return c;
}

double row_radius(const geometry::QuadMesh& mesh, int row, const Vec3& center) {
  double s = 0.0;
  for (int j = 0; j < mesh.res_v; ++j) s += (mesh.vertices[static_cast<std::size_t>(row * mesh.res_v + j)] - center).norm();
  return s / mesh.res_v;
}

}  // namespace

RootFrame root_frame(const geometry::QuadMesh& mesh) {
  const Points c = row_centroids(mesh);
  RootFrame f;
  f.center = c[0];
  const Vec3 d = c[1] - c[0];
  if (d.norm() < 1e-12) throw DegenerateError("branch root direction is undefined");
  f.direction = d.normalized();
  f.radius = row_radius(mesh, 0, c[0]);
  return f;
}

Attachment attachment(const geometry::QuadMesh& parent, double e) {
  require(e > 0.0 && e < 1.0, "bifurcation location must lie in (0, 1)");
  const Points c = row_centroids(parent);
  std::vector<double> s(c.size(), 0.0);
  for (std::size_t i = 1; i < c.size(); ++i) s[i] = s[i - 1] + (c[i] - c[i - 1]).norm();
  const double target = e * s.back();
  std::size_t k = 1;
  while (k + 1 < c.size() && s[k] < target) ++k;
  const double f = (target - s[k - 1]) / std::max(s[k] - s[k - 1], 1e-300);
  Attachment a;
  a.point = (1 - f) * c[k - 1] + f * c[k];
  a.tangent = (c[k] - c[k - 1]).normalized();

  const Vec3 chord = c.back() - c.front();
  Vec3 foot = c.front();
  if (chord.squaredNorm() > 0) foot += chord * ((a.point - c.front()).dot(chord) / chord.squaredNorm());
  Vec3 out = a.point - foot;
  out -= out.dot(a.tangent) * a.tangent;
  if (out.norm() < 1e-9 * std::max(1.0, s.back())) {
    const std::size_t lo = k >= 2 ? k - 2 : 0, hi = std::min(k + 1, c.size() - 1);
    const Vec3 t0 = (c[lo + 1] - c[lo]).normalized(), t1 = (c[hi] - c[hi - 1]).normalized();
    out = -(t1 - t0);
    out -= out.dot(a.tangent) * a.tangent;
    if (out.norm() < 1e-12) out = geometry::initial_radial_direction(a.tangent, a.tangent);
  }
  a.outward = out.normalized();
  return a;
}

JunctionInfo junction_info(const geometry::QuadMesh& parent, const std::string& branch, double e,
                           const geometry::QuadMesh& placed) {
  JunctionInfo info;
  info.branch = branch;
  info.e = e;
  const RootFrame rf = root_frame(placed);
  info.root_center = rf.center;
  info.root_radius = rf.radius;

  // Inside test against the nearest parent ring: closer to its centroid than its mean radius.
  const Points c = row_centroids(parent);
  std::size_t ring = 0;
  double best = 1e300;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (const double d = (c[i] - rf.center).squaredNorm(); d < best) best = d, ring = i;
  const bool inside = std::sqrt(best) < row_radius(parent, static_cast<int>(ring), c[ring]);
  const Vec3 q[1] = {rf.center};
  const double wall = std::sqrt(kernels::nearest(q, parent.vertices).sq_dist[0]);
  info.depth = inside ? wall : -wall;
  info.detached = !inside && wall > rf.radius;
  return info;
}

Scene assemble(const std::map<std::string, geometry::QuadMesh>& vessels, const BranchTopology& topology) {
  for (double e : topology.e) require(e > 0.0 && e < 1.0, "bifurcation locations must lie in (0, 1)");
  const auto aorta = vessels.find("aorta");
  require(aorta != vessels.end(), "assembly needs the aorta");
  Scene scene;
  scene.meshes["aorta"] = aorta->second;
  for (const auto& b : kTopologyOrder) {
    const auto it = vessels.find(b);
    require(it != vessels.end(), "assembly is missing branch " + b);
    const double e = topology.at(b);
    const Attachment at = attachment(aorta->second, e);
    const RootFrame rf = root_frame(it->second);
    const Eigen::Matrix3d R = Eigen::Quaterniond::FromTwoVectors(rf.direction, at.outward).toRotationMatrix();
    geometry::QuadMesh placed = it->second;
    for (auto& v : placed.vertices) v = at.point + R * (v - rf.center);
    scene.junctions.push_back(junction_info(aorta->second, b, e, placed));
    scene.meshes[b] = std::move(placed);
  }
  return scene;
}

}  // namespace vg::cohort
