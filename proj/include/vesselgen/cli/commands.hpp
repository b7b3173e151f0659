#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vesselgen/core/json.hpp"
#include "vesselgen/generative/hierarchical.hpp"

namespace vg::cli {

namespace fs = std::filesystem;

std::string sha1_hex(const std::string& bytes);
std::string sha1_file(const fs::path& path);

/// Provenance record written as <out>/run_manifest.json by every command. Inputs and
/// outputs are hashed so two runs can be compared by content.
class RunManifest {
 public:
  RunManifest(std::string command, Json config, std::uint64_t seed);
  void input(const fs::path& p);   // file or directory (every regular file below it)
  void output(const fs::path& p);  // same
  Json to_json() const;
  /// Writes <dir>/run_manifest.json and returns the JSON.
  Json write(const fs::path& dir) const;

 private:
  static Json hash_entries(const fs::path& p);
  std::string command_;
  Json config_;
  std::uint64_t seed_;
  std::vector<fs::path> inputs_, outputs_;
};

/// Flag values that override the config file; unset flags leave it alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<int> batch;
};

/// Built-in defaults, overlaid with the file (if any), overlaid with flags.
Json resolve_config(const std::optional<fs::path>& file, const Overrides& flags);

/// Network and optimizer settings from the "model", "train" and "schedule" sections.
generative::BranchTrainingConfig training_config(const Json& cfg);
/// The "sampling" section with stage seeds derived from the top-level seed.
generative::HierarchicalConfig sampling_config(const Json& cfg);

/// Process exit code for an exception: 2 validation, 3 numerical, 1 anything else.
int exit_code(const std::exception& e);

std::vector<std::string> parse_branches(const std::string& csv);

// Each command writes its outputs and a run manifest under `out` and returns the manifest.

Json synth_data(std::uint64_t seed, int count, const fs::path& out);

/// Fits latents to every record of a cohort directory: <out>/<branch>/<id>.json.
Json encode(const fs::path& cohort_dir, const std::vector<std::string>& branches, const Json& config,
            const fs::path& out);

/// component: "both", or "cl" / "rad" to retrain one network of the checkpoint already at
/// <out>/<branch>.json.
Json train(const fs::path& latents_dir, const std::string& branch, const std::string& component, const Json& config,
           const fs::path& out);

/// K = sampling.K centerlines, L = sampling.L profiles each; prompts_file may be empty.
Json condition(const fs::path& models_dir, const std::string& branch, const std::optional<fs::path>& prompts_file,
               const Json& config, const fs::path& out);
inline Json sample(const fs::path& models_dir, const std::string& branch, const Json& config, const fs::path& out) {
  return condition(models_dir, branch, std::nullopt, config, out);
}

/// method: "pca-g" (joint PCA + Gaussian) or "pca-g-d" (separate centerline/radii models).
Json baseline(const fs::path& latents_dir, const std::string& branch, const std::string& method, int count,
              const Json& config, const fs::path& out);

/// Biomarker CSV for every sample in a directory (latent JSON preferred over OBJ).
Json biomarkers(const fs::path& input_dir, const fs::path& out);

/// Diffusion vs both baselines on one branch: `count` samples each, subspace distances to
/// the training PCA, biomarker comparison against the training latents. Samples are kept
/// as latents only.
Json benchmark(const fs::path& models_dir, const fs::path& latents_dir, const std::string& branch, int count,
               const Json& config, const fs::path& out);

}  // namespace vg::cli
