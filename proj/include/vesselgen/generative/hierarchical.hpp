#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"
#include "vesselgen/generative/denoiser.hpp"
#include "vesselgen/generative/normalizer.hpp"
#include "vesselgen/generative/sampler.hpp"
#include "vesselgen/generative/schedule.hpp"
#include "vesselgen/generative/train.hpp"
#include "vesselgen/fitting/decoder.hpp"

namespace vg::generative {

/// Centerline and radii diffusion models of one branch with their normalizations.
/// The radii network is conditioned on the normalized, flattened control points.
struct BranchModel {
  std::string branch;
  int n = 0;
  int m = 0;
  NoiseSchedule schedule;
  DenoiserNet centerline;
  DenoiserNet radii;
  Normalizer cl_norm;
  Normalizer rad_norm;
  Json train_config;

  Vector encode_centerline(PointSpan C) const;   // normalized
  Points decode_centerline(const Vector& z) const;
  Vector encode_radii(const Matrix& R) const;
  /// Denormalizes and floors radii at 1e-3 of the smallest training lower bound.
  Matrix decode_radii(const Vector& z) const;
  double radius_floor() const;
};

Json branch_model_to_json(const BranchModel& m);
BranchModel branch_model_from_json(const Json& j);
void save_branch_model(const std::filesystem::path& path, const BranchModel& m);
BranchModel load_branch_model(const std::filesystem::path& path);

/// Network sizes and optimizer settings for both components of a branch model. The
/// dims of the nets are filled in from (n, m).
struct BranchTrainingConfig {
  DenoiserConfig centerline_net;
  DenoiserConfig radii_net;
  TrainConfig train;
  int T = 1000;
};

Json branch_training_config_to_json(const BranchTrainingConfig& c);
BranchTrainingConfig branch_training_config_from_json(const Json& j, BranchTrainingConfig base = {});

struct BranchTrainingLog {
  TrainLog centerline;
  TrainLog radii;
};

enum class TrainComponent { both, centerline, radii };
/// "both", "cl" | "centerline", "rad" | "radii".
TrainComponent train_component_from_string(const std::string& s);

/// Fits normalizations and trains the centerline and the centerline-conditioned radii
/// networks on paired latents. With a single component the other network is copied from
/// `base`, which must match in (n, m) and T.
BranchModel train_branch_model(const std::string& branch, const std::vector<Points>& centerlines,
                               const std::vector<Matrix>& radii, const BranchTrainingConfig& cfg,
                               BranchTrainingLog* log = nullptr, TrainComponent component = TrainComponent::both,
                               const BranchModel* base = nullptr);

/// Prompt sets for one vessel: centerline points, wall contours and surface patches.
struct PromptBundle {
  Points points;
  std::vector<Points> contours;
  std::vector<Points> patches;

  bool empty() const { return points.empty() && contours.empty() && patches.empty(); }
  /// Stage 1 targets: centerline points plus contour centroids.
  Points centerline_targets() const;
  /// Stage 2 targets: all contour and patch points.
  Points surface_targets() const;
};

/// Stage 2 observation on the surface.
///  projected: each target is matched once to a surface parameter (u*, v*) on the fixed
///             centerline; the loss is the mean squared distance to S(u*, v*; R).
///  nearest:   one-sided Chamfer to the guide lattice (floor set by the lattice spacing).
enum class SurfaceLoss { projected, nearest };
SurfaceLoss surface_loss_from_string(const std::string& s);
std::string to_string(SurfaceLoss l);

struct HierarchicalConfig {
  static SamplerConfig conditional() {
    SamplerConfig c;
    c.gamma = 1.0;
    return c;
  }

  int K = 5;  // centerlines
  int L = 5;  // radial profiles per centerline
  SamplerConfig centerline;
  SamplerConfig radii = conditional();  // gamma 1: the plain centerline-conditioned score
  int guide_res_u = 48;  // surface lattice used inside the radii guidance
  int guide_res_v = 24;
  SurfaceLoss surface_loss = SurfaceLoss::projected;
};

Json hierarchical_config_to_json(const HierarchicalConfig& c);
HierarchicalConfig hierarchical_config_from_json(const Json& j, HierarchicalConfig base = {});

/// Stage 1: `count` centerlines, DPS-guided towards `targets` when non-empty.
std::vector<Points> sample_centerlines(const BranchModel& model, PointSpan targets, const SamplerConfig& cfg, int count,
                                       SampleStats* stats = nullptr, std::uint64_t stream_offset = 0);

/// Stage 2: `count` radial profiles for a fixed centerline with CFG weight cfg.gamma and
/// DPS towards surface `targets` when non-empty.
std::vector<Matrix> sample_radii(const BranchModel& model, PointSpan C, PointSpan targets, const SamplerConfig& cfg,
                                 int count, int guide_res_u = 48, int guide_res_v = 24, SampleStats* stats = nullptr,
                                 std::uint64_t stream_offset = 0, SurfaceLoss loss = SurfaceLoss::projected);

/// Surface parameters (u, v) of the points of S(.; R) closest to each target, for the
/// skeleton in `state`: dense lattice search then Gauss-Newton.
std::pair<std::vector<double>, std::vector<double>> match_surface_params(const fitting::NurbsDecoder& dec,
                                                                         const fitting::NurbsDecoder::State& state,
                                                                         const Matrix& R, PointSpan targets);

struct HierarchicalSample {
  std::vector<Points> centerlines;  // K
  std::vector<Matrix> radii;        // K*L, profile k*L + l belongs to centerline k
  int L = 0;
  int skipped_steps = 0;
  const Points& centerline_of(std::size_t k) const { return centerlines[k / static_cast<std::size_t>(L)]; }
};

HierarchicalSample sample_hierarchical(const BranchModel& model, const PromptBundle& prompts,
                                       const HierarchicalConfig& cfg);

}  // namespace vg::generative
