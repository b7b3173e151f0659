#include "vesselgen/cohort/record.hpp"

#include <algorithm>

#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/core/error.hpp"

namespace vg::cohort {

Orientation orientation_from_string(const std::string& s) {
  if (s == "keep") return Orientation::keep;
  if (s == "lowest_first") return Orientation::lowest_first;
  if (s == "reverse") return Orientation::reverse;
  throw ValidationError("unknown orientation '" + s + "'");
}

VesselRecord make_record(const std::string& branch, Points centerline, geometry::QuadMesh surface,
                         const IngestOptions& opt) {
  require(is_branch(branch), "unknown branch '" + branch + "'");
  require(centerline.size() >= 2, "centerline needs at least two points");
  require(!surface.vertices.empty(), "surface is empty");
  require(opt.up_axis >= 0 && opt.up_axis < 3, "up axis must be 0, 1 or 2");
  for (const auto& p : centerline) require(p.allFinite(), "centerline has non-finite coordinates");
  for (const auto& p : surface.vertices) require(p.allFinite(), "surface has non-finite coordinates");

  VesselRecord r;
  r.id = opt.id;
  r.branch = branch;
  bool flip = false;
  switch (opt.orientation) {
    case Orientation::keep: break;
    case Orientation::reverse: flip = true; break;
    case Orientation::lowest_first:
      flip = centerline.back()(opt.up_axis) < centerline.front()(opt.up_axis);
      break;
  }
  if (flip) std::reverse(centerline.begin(), centerline.end());
  r.flipped = flip;

  r.offset = centroid(surface.vertices);
  for (auto& p : surface.vertices) p -= r.offset;
  for (auto& p : centerline) p -= r.offset;
  r.centerline = std::move(centerline);
  r.surface = std::move(surface);
  return r;
}

VesselRecord ingest(const std::filesystem::path& centerline_file, const std::filesystem::path& surface_file,
                    const std::string& branch, const IngestOptions& opt) {
  return make_record(branch, geometry::read_polyline(centerline_file), geometry::read_obj(surface_file), opt);
}

std::pair<std::filesystem::path, std::filesystem::path> export_record(const VesselRecord& r,
                                                                      const std::filesystem::path& dir,
                                                                      const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto cl = dir / (stem + "_centerline.csv");
  const auto sf = dir / (stem + "_surface.obj");
  write_text(cl, geometry::polyline_to_csv(r.centerline));
  geometry::write_obj(sf, r.surface);
  return {cl, sf};
}

}  // namespace vg::cohort
