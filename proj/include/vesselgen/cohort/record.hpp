#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "vesselgen/core/types.hpp"
#include "vesselgen/geometry/io.hpp"
#include "vesselgen/geometry/surface.hpp"

namespace vg::cohort {

/// One single-channel vessel: centerline polyline and wall surface, recentered so the
/// surface points have zero mean.
struct VesselRecord {
  std::string id;
  std::string branch;
  Points centerline;
  geometry::QuadMesh surface;  // quads may be empty (point cloud)
  std::optional<geometry::Latent> latent;
  Vec3 offset = Vec3::Zero();  // subtracted surface mean
  bool flipped = false;        // centerline was reversed at ingestion
};

/// Centerline direction handling at ingestion.
///  keep:         trust the file order
///  lowest_first: start at the endpoint with the smaller coordinate along `up`
///  reverse:      explicit override, always flip
enum class Orientation { keep, lowest_first, reverse };

Orientation orientation_from_string(const std::string& s);

struct IngestOptions {
  Orientation orientation = Orientation::keep;
  int up_axis = 2;
  std::string id;
};

/// Recenters and orients raw geometry. ValidationError on empty input.
VesselRecord make_record(const std::string& branch, Points centerline, geometry::QuadMesh surface,
                         const IngestOptions& opt = {});

/// Reads a polyline file and an OBJ surface.
VesselRecord ingest(const std::filesystem::path& centerline_file, const std::filesystem::path& surface_file,
                    const std::string& branch, const IngestOptions& opt = {});

/// Writes <stem>_centerline.csv and <stem>_surface.obj; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> export_record(const VesselRecord& r,
                                                                      const std::filesystem::path& dir,
                                                                      const std::string& stem);

}  // namespace vg::cohort
