#include "vesselgen/geometry/io.hpp"

#include <cstdio>
#include <sstream>

#include "vesselgen/core/error.hpp"

namespace vg::geometry {

Json latent_to_json(const Latent& z) {
  return Json{{"control_points", to_json(PointSpan(z.control_points))}, {"radii", to_json(z.radii)}};
}

Latent latent_from_json(const Json& j) {
  require(j.contains("control_points") && j.contains("radii"), "latent JSON needs control_points and radii");
  Latent z;
  z.control_points = points_from_json(j.at("control_points"));
  z.radii = matrix_from_json(j.at("radii"));
  require(static_cast<Eigen::Index>(z.control_points.size()) == z.radii.rows(),
          "latent radii rows must match control point count");
  return z;
}

Json grid_to_json(const VesselSkeleton& skel, const Matrix& radii, const SurfaceControlGrid& grid) {
  return Json{{"centers", to_json(PointSpan(skel.centers))},
              {"tangents", to_json(PointSpan(skel.tangents))},
              {"frame_w", to_json(PointSpan(skel.frame_w))},
              {"radii", to_json(radii)},
              {"degrees", {grid.degree_u, grid.degree_v}},
              {"knots", {{"u", grid.knots_u.values}, {"v", grid.knots_v.values}}}};
}

namespace {
std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

std::string mesh_to_obj(const QuadMesh& mesh) {
  std::ostringstream out;
  if (mesh.res_u > 0 && mesh.res_v > 0) out << "# lattice " << mesh.res_u << ' ' << mesh.res_v << '\n';
  for (const auto& v : mesh.vertices)
    out << "v " << fmt_double(v.x()) << ' ' << fmt_double(v.y()) << ' ' << fmt_double(v.z()) << '\n';
  for (const auto& q : mesh.quads) out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  return out.str();
}

void write_obj(const std::filesystem::path& path, const QuadMesh& mesh) { write_text(path, mesh_to_obj(mesh)); }

QuadMesh parse_obj(const std::string& text) {
  QuadMesh mesh;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "#") {
      std::string key;
      if (ls >> key && key == "lattice") ls >> mesh.res_u >> mesh.res_v;
      continue;
    }
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ValidationError("malformed OBJ vertex on line " + std::to_string(lineno));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        try {
          idx.push_back(std::stoi(tok.substr(0, slash)) - 1);
        } catch (const std::exception&) {
          throw ValidationError("malformed OBJ face on line " + std::to_string(lineno));
        }
      }
      if (idx.size() == 4) mesh.quads.push_back({idx[0], idx[1], idx[2], idx[3]});
    }
  }
  for (const auto& q : mesh.quads)
    for (int k : q)
      require(k >= 0 && static_cast<std::size_t>(k) < mesh.vertices.size(), "OBJ face index out of range");
  if (mesh.res_u * mesh.res_v != static_cast<int>(mesh.vertices.size())) mesh.res_u = mesh.res_v = 0;
  return mesh;
}

QuadMesh read_obj(const std::filesystem::path& path) { return parse_obj(read_text(path)); }

Points parse_polyline(const std::string& text) {
  Points pts;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z)) throw ValidationError("malformed polyline row " + std::to_string(lineno));
    pts.emplace_back(x, y, z);
  }
  return pts;
}

Points read_polyline(const std::filesystem::path& path) { return parse_polyline(read_text(path)); }

std::string polyline_to_csv(PointSpan pts) {
  std::ostringstream out;
  out << "# x,y,z\n";
  for (const auto& p : pts) out << fmt_double(p.x()) << ',' << fmt_double(p.y()) << ',' << fmt_double(p.z()) << '\n';
  return out.str();
}

}  // namespace vg::geometry
