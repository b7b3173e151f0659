#include "vesselgen/geometry/surface.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vesselgen/core/error.hpp"

namespace vg::geometry {

SurfaceControlGrid make_grid(Points points, int n, int m, const KnotVector& knots_u, int degree_v,
                             std::vector<double> weights) {
  require(n >= 2 && m >= 3, "surface grid needs n >= 2 and m >= 3");
  require(points.size() == static_cast<std::size_t>(n * m), "surface grid point count must be n*m");
  require(knots_u.control_count() == n, "streamwise knot vector does not match n");
  if (weights.empty()) weights.assign(points.size(), 1.0);
  require(weights.size() == points.size(), "weight count must be n*m");
  for (double w : weights) require(w > 0.0 && std::isfinite(w), "surface weights must be positive");

  SurfaceControlGrid g;
  g.n = n;
  g.m = m;
  g.degree_u = knots_u.degree;
  g.degree_v = degree_v;
  g.knots_u = knots_u;
  g.knots_v = KnotVector::periodic(m, degree_v);
  g.points = std::move(points);
  g.weights = std::move(weights);
  const int cols = g.padded_cols();
  g.padded_points.resize(static_cast<std::size_t>(n * cols));
  g.padded_weights.resize(static_cast<std::size_t>(n * cols));
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < cols; ++p) {
      const auto src = static_cast<std::size_t>(i * m + wrap_column(p, m));
      g.padded_points[static_cast<std::size_t>(i * cols + p)] = g.points[src];
      g.padded_weights[static_cast<std::size_t>(i * cols + p)] = g.weights[src];
    }
  return g;
}

SurfaceControlGrid skeleton_points(const VesselSkeleton& skel, const Matrix& radii, const KnotVector& knots_u,
                                   int degree_v) {
  require(radii.rows() == skel.n && radii.cols() == skel.m, "radial profile shape does not match skeleton");
  Points pts;
  pts.reserve(static_cast<std::size_t>(skel.n * skel.m));
  for (int i = 0; i < skel.n; ++i)
    for (int j = 0; j < skel.m; ++j) {
      const double r = radii(i, j);
      if (!(r > 0.0) || !std::isfinite(r))
        throw ValidationError("radius r[" + std::to_string(i) + "][" + std::to_string(j) + "] must be positive");
      pts.push_back(skel.centers[static_cast<std::size_t>(i)] + r * skel.direction(i, j));
    }
  return make_grid(std::move(pts), skel.n, skel.m, knots_u, degree_v);
}

Vec3 eval_surface(const SurfaceControlGrid& g, double u, double v) {
  if (!(u >= -1e-12 && u <= 1.0 + 1e-12 && v >= -1e-12 && v <= 1.0 + 1e-12))
    throw DomainError("surface parameters must lie in [0,1]");
  const auto bu = basis_functions(std::clamp(u, 0.0, 1.0), g.knots_u);
  const auto bv = basis_functions(std::clamp(v, 0.0, 1.0), g.knots_v);
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  const int cols = g.padded_cols();
  for (int a = 0; a < bu.count; ++a)
    for (int b = 0; b < bv.count; ++b) {
      const int i = bu.start + a;
      const int p = bv.start + b;
      const double w = bu.values[static_cast<std::size_t>(a)] * bv.values[static_cast<std::size_t>(b)] *
                       g.padded_weights[static_cast<std::size_t>(i * cols + p)];
      num += w * g.padded_points[static_cast<std::size_t>(i * cols + p)];
      den += w;
    }
  return num / den;
}

namespace {

kernels::SurfaceStencil stencil_for(const KnotVector& knots_u, int n, int m, int degree_v, std::span<const double> us,
                                    std::span<const double> vs, std::span<const double> weights, bool pairs) {
  require(knots_u.control_count() == n, "streamwise knot vector does not match n");
  require(weights.empty() || weights.size() == static_cast<std::size_t>(n * m), "weight count must be n*m");
  require(!pairs || us.size() == vs.size(), "parameter pairs need matching u and v lists");
  const KnotVector knots_v = KnotVector::periodic(m, degree_v);
  kernels::SurfaceStencil st;
  st.samples = static_cast<int>(pairs ? us.size() : us.size() * vs.size());
  st.controls = n * m;
  st.width = (knots_u.degree + 1) * (degree_v + 1);
  st.index.resize(static_cast<std::size_t>(st.samples) * static_cast<std::size_t>(st.width));
  st.weight.resize(st.index.size());

  std::vector<BasisValues> bvs;
  bvs.reserve(vs.size());
  for (double v : vs) {
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) throw DomainError("surface parameter v outside [0,1]");
    bvs.push_back(basis_functions(std::clamp(v, 0.0, 1.0), knots_v));
  }
  std::size_t e = 0;
  auto emit = [&](const BasisValues& bu, const BasisValues& bv) {
    const std::size_t base = e;
    double den = 0.0;
    for (int a = 0; a < bu.count; ++a)
      for (int b = 0; b < bv.count; ++b) {
        const int c = (bu.start + a) * m + wrap_column(bv.start + b, m);
        double w = bu.values[static_cast<std::size_t>(a)] * bv.values[static_cast<std::size_t>(b)];
        if (!weights.empty()) w *= weights[static_cast<std::size_t>(c)];
        st.index[e] = c;
        st.weight[e] = w;
        den += w;
        ++e;
      }
    for (std::size_t k = base; k < e; ++k) st.weight[k] /= den;
  };
  for (std::size_t iu = 0; iu < us.size(); ++iu) {
    const double u = us[iu];
    if (!(u >= -1e-12 && u <= 1.0 + 1e-12)) throw DomainError("surface parameter u outside [0,1]");
    const auto bu = basis_functions(std::clamp(u, 0.0, 1.0), knots_u);
    if (pairs)
      emit(bu, bvs[iu]);
    else
      for (const auto& bv : bvs) emit(bu, bv);
  }
  st.finalize();
  return st;
}

}  // namespace

kernels::SurfaceStencil surface_stencil(const KnotVector& knots_u, int n, int m, int degree_v,
                                        std::span<const double> us, std::span<const double> vs,
                                        std::span<const double> weights) {
  return stencil_for(knots_u, n, m, degree_v, us, vs, weights, false);
}

kernels::SurfaceStencil surface_stencil_pairs(const KnotVector& knots_u, int n, int m, int degree_v,
                                              std::span<const double> us, std::span<const double> vs,
                                              std::span<const double> weights) {
  return stencil_for(knots_u, n, m, degree_v, us, vs, weights, true);
}

std::vector<double> mesh_u_params(int res_u) {
  require(res_u >= 2, "streamwise mesh resolution must be at least 2");
  std::vector<double> us(static_cast<std::size_t>(res_u));
  for (int k = 0; k < res_u; ++k) us[static_cast<std::size_t>(k)] = static_cast<double>(k) / (res_u - 1);
  return us;
}

std::vector<double> mesh_v_params(int res_v) {
  require(res_v >= 2, "radial mesh resolution must be at least 2");
  std::vector<double> vs(static_cast<std::size_t>(res_v));
  for (int k = 0; k < res_v; ++k) vs[static_cast<std::size_t>(k)] = static_cast<double>(k) / res_v;
  return vs;
}

std::vector<std::array<int, 4>> lattice_quads(int res_u, int res_v) {
  std::vector<std::array<int, 4>> quads;
  quads.reserve(static_cast<std::size_t>((res_u - 1) * res_v));
  for (int i = 0; i + 1 < res_u; ++i)
    for (int j = 0; j < res_v; ++j) {
      const int jn = (j + 1) % res_v;
      quads.push_back({i * res_v + j, i * res_v + jn, (i + 1) * res_v + jn, (i + 1) * res_v + j});
    }
  return quads;
}

QuadMesh eval_mesh(const SurfaceControlGrid& grid, int res_u, int res_v) {
  const auto us = mesh_u_params(res_u);
  const auto vs = mesh_v_params(res_v);
  const auto st = surface_stencil(grid.knots_u, grid.n, grid.m, grid.degree_v, us, vs, grid.weights);
  QuadMesh mesh;
  mesh.res_u = res_u;
  mesh.res_v = res_v;
  mesh.vertices = kernels::apply_stencil(st, grid.points);
  mesh.quads = lattice_quads(res_u, res_v);
  return mesh;
}

}  // namespace vg::geometry
