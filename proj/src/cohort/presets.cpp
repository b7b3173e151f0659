#include "vesselgen/cohort/presets.hpp"

#include <algorithm>

#include "vesselgen/core/error.hpp"
#include "vesselgen/fitting/fit.hpp"
#include "vesselgen/generative/hierarchical.hpp"
#include "vesselgen/generative/schedule.hpp"
#include "vesselgen/generative/train.hpp"

namespace vg::cohort {

const std::vector<BranchPreset>& branch_presets() {
  static const std::vector<BranchPreset> presets = {
      {"aorta", 16, 21, 200, 80}, {"LCCA", 16, 16, 120, 60}, {"LSA", 16, 16, 120, 60},
      {"RCCA", 8, 16, 60, 60},    {"RSA", 16, 16, 120, 60},
  };
  return presets;
}

const BranchPreset& preset(const std::string& branch) {
  static const BranchPreset aorta32{"aorta32", 16, 32, 200, 80};
  if (branch == "aorta32") return aorta32;
  const auto& all = branch_presets();
  const auto it = std::find_if(all.begin(), all.end(), [&](const BranchPreset& p) { return p.branch == branch; });
  require(it != all.end(), "unknown branch '" + branch + "'");
  return *it;
}

bool is_branch(const std::string& branch) {
  return branch == "aorta32" || std::find(kBranches.begin(), kBranches.end(), branch) != kBranches.end();
}

Json preset_to_json(const BranchPreset& p) {
  return Json{{"branch", p.branch}, {"n", p.n}, {"m", p.m}, {"res_u", p.res_u}, {"res_v", p.res_v}};
}

Json default_pipeline_config() {
  const auto s = generative::make_linear_schedule();
  Json presets = Json::object();
  for (const auto& p : branch_presets()) presets[p.branch] = preset_to_json(p);
  presets["aorta32"] = preset_to_json(preset("aorta32"));
  generative::HierarchicalConfig h;
  const generative::BranchTrainingConfig b;
  const fitting::FitConfig f;
  return Json{{"seed", 0},
              {"schedule", {{"T", s.T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}}},
              {"train", generative::train_config_to_json({})},
              {"model",
               {{"centerline_net", generative::denoiser_config_to_json(b.centerline_net)},
                {"radii_net", generative::denoiser_config_to_json(b.radii_net)}}},
              {"fit",
               {{"max_iters", f.max_iters},
                {"step_size", f.step_size},
                {"tolerance", f.tolerance},
                {"res_u", f.res_u},
                {"res_v", f.res_v},
                {"max_target_points", 0}}},
              {"sampling", generative::hierarchical_config_to_json(h)},
              {"presets", presets}};
}

Json merge_config(const Json& base, const Json& overlay) {
  Json out = base;
  out.merge_patch(overlay);
  return out;
}

}  // namespace vg::cohort
