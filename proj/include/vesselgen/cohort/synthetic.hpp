#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vesselgen/cohort/record.hpp"
#include "vesselgen/core/json.hpp"

namespace vg::cohort {

/// Relative bifurcation locations along the aorta, ordered as kTopologyOrder.
struct BranchTopology {
  std::array<double, 4> e{};
  double at(const std::string& branch) const;
};

/// Records grouped by branch; records[b][k] belongs to member ids[k].
struct Cohort {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<VesselRecord>> records;
  std::vector<BranchTopology> topologies;
  std::uint64_t seed = 0;

  std::size_t size() const { return ids.size(); }
  const std::vector<VesselRecord>& branch(const std::string& b) const;
};

inline constexpr int kDefaultCohortSize = 30;
inline constexpr int kMinCohortSize = 5;

/// Aorta-like arches (ascending limb, tilted half-circle arch, shorter descending limb)
/// with tapering radii, elliptic sections and occasional bulges, plus four tapered curved
/// branches. Surfaces are decoded from ground-truth latents, which the records carry.
Cohort make_synthetic_cohort(std::uint64_t seed, int count = kDefaultCohortSize);

/// <dir>/manifest.json and <dir>/<id>/<branch>_{centerline.csv,surface.obj,latent.json}.
Json save_cohort(const Cohort& c, const std::filesystem::path& dir);
/// Re-ingests a saved cohort (latents included when present).
Cohort load_cohort(const std::filesystem::path& dir);

Json topology_to_json(const BranchTopology& t);
BranchTopology topology_from_json(const Json& j);

}  // namespace vg::cohort
