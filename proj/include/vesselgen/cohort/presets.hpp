#pragma once

#include <array>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"

namespace vg::cohort {

/// Latent size and mesh resolution of one branch.
struct BranchPreset {
  std::string branch;
  int n = 0;      // streamwise sections / control points
  int m = 0;      // radial directions
  int res_u = 0;  // mesh rows
  int res_v = 0;  // mesh columns
};

/// The five modeled vessels in table order.
inline const std::array<std::string, 5> kBranches = {"aorta", "LCCA", "LSA", "RCCA", "RSA"};
/// Bifurcation order of the topology vector e.
inline const std::array<std::string, 4> kTopologyOrder = {"RCCA", "LSA", "LCCA", "RSA"};

const std::vector<BranchPreset>& branch_presets();
/// Also accepts "aorta32", the 16 x 32 aorta variant.
const BranchPreset& preset(const std::string& branch);
bool is_branch(const std::string& branch);

Json preset_to_json(const BranchPreset& p);

/// Built-in pipeline defaults: schedule, training, sampling and the branch presets.
Json default_pipeline_config();

/// Defaults overlaid with a config file, then with explicit overrides (flag values).
Json merge_config(const Json& base, const Json& overlay);

}  // namespace vg::cohort
