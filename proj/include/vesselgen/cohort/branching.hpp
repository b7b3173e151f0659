#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vesselgen/baselines/pca.hpp"
#include "vesselgen/cohort/synthetic.hpp"
#include "vesselgen/geometry/surface.hpp"

namespace vg::cohort {

inline constexpr double kBranchClampLo = 0.02;
inline constexpr double kBranchClampHi = 0.98;

baselines::GaussianModel fit_branching(const std::vector<BranchTopology>& topologies);

/// Draws clamped to (0.02, 0.98); `clamped` counts coordinates that hit a bound.
std::vector<BranchTopology> sample_branching(const baselines::GaussianModel& model, int count, std::uint64_t seed,
                                             int* clamped = nullptr);

/// Per-branch placement diagnostics. depth > 0: root center inside the parent wall by
/// that much; depth < 0: outside by |depth|.
struct JunctionInfo {
  std::string branch;
  double e = 0.0;
  Vec3 root_center = Vec3::Zero();
  double root_radius = 0.0;
  double depth = 0.0;
  bool detached = false;  // root lies outside the parent by more than its own radius
};

struct Scene {
  std::map<std::string, geometry::QuadMesh> meshes;  // aorta in its own frame, branches placed
  std::vector<JunctionInfo> junctions;               // kTopologyOrder
};

/// Root ring of a lattice mesh (row 0): center, mean radius and the direction to row 1.
struct RootFrame {
  Vec3 center = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double radius = 0.0;
};
RootFrame root_frame(const geometry::QuadMesh& mesh);

/// Parent point at arc-length fraction e along the row centroids of the aorta mesh and the
/// outward direction there: the part of (point - nearest point on the inlet-outlet chord)
/// orthogonal to the tangent, or the curvature normal's opposite when that vanishes.
struct Attachment {
  Vec3 point = Vec3::Zero();
  Vec3 tangent = Vec3::UnitZ();
  Vec3 outward = Vec3::UnitX();
};
Attachment attachment(const geometry::QuadMesh& parent, double e);

/// Rigidly places every branch so that its root center sits on the aorta centerline at
/// fraction e and its root direction points outward (minimal rotation). The aorta stays put.
/// Boolean union and junction smoothing are not attempted.
Scene assemble(const std::map<std::string, geometry::QuadMesh>& vessels, const BranchTopology& topology);

/// Depth and detachment of a placed branch relative to the parent surface.
JunctionInfo junction_info(const geometry::QuadMesh& parent, const std::string& branch, double e,
                           const geometry::QuadMesh& placed);

}  // namespace vg::cohort
