#pragma once

#include <filesystem>
#include <string>

#include "vesselgen/core/json.hpp"
#include "vesselgen/geometry/surface.hpp"

namespace vg::geometry {

/// Latent pair (C, R) for one vessel.
struct Latent {
  Points control_points;  // n x 3
  Matrix radii;           // n x m
};

Json latent_to_json(const Latent& z);
Latent latent_from_json(const Json& j);

/// {centers, tangents, frame_w, radii, degrees, knots}
Json grid_to_json(const VesselSkeleton& skel, const Matrix& radii, const SurfaceControlGrid& grid);

/// ASCII OBJ with quad faces (1-based indices). Faces may be empty (point cloud).
std::string mesh_to_obj(const QuadMesh& mesh);
void write_obj(const std::filesystem::path& path, const QuadMesh& mesh);

/// Reads `v` and `f` records; polygon faces of any arity are kept when they are quads.
/// Lattice dimensions are restored from a "# lattice <res_u> <res_v>" comment when present.
QuadMesh read_obj(const std::filesystem::path& path);
QuadMesh parse_obj(const std::string& text);

/// Whitespace- or comma-separated rows of x y z; '#' starts a comment.
Points parse_polyline(const std::string& text);
Points read_polyline(const std::filesystem::path& path);
std::string polyline_to_csv(PointSpan pts);

}  // namespace vg::geometry
