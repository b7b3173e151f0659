#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/geometry/surface.hpp"

using namespace vg;
using namespace vg::geometry;

namespace {

struct Tube {
  ControlPolygon poly;
  VesselSkeleton skel;
};

Tube helix_tube(int n = 10, int m = 8) {
  Tube t;
  t.poly = fit_curve(oracle::helix(n, 3.0, 1.0, 0.75), 3);
  t.skel = build_skeleton(t.poly, m);
  return t;
}

Tube straight_tube(int n, int m) {
  Points samples;
  for (int k = 0; k < n; ++k) samples.emplace_back(0, 0, 10.0 * k / (n - 1));
  Tube t;
  t.poly = fit_curve(samples, 3);
  t.skel = build_skeleton(t.poly, m);
  return t;
}

Matrix random_radii(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> d(0.5, 1.5);
  Matrix r(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) r(i, j) = d(rng);
  return r;
}

}  // namespace

TEST_CASE("control points sit at radius r along the radial directions") {
  auto t = helix_tube();
  const Matrix r = Matrix::Ones(t.skel.n, t.skel.m);
  const auto g = skeleton_points(t.skel, r, t.poly.knots);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.m; ++j) CHECK(std::abs((g.at(i, j) - t.skel.centers[i]).norm() - 1.0) <= 1e-12);
}

TEST_CASE("radius positivity") {
  auto t = helix_tube();
  Matrix r = Matrix::Constant(t.skel.n, t.skel.m, 1e-6);
  const auto g = skeleton_points(t.skel, r, t.poly.knots);
  CHECK((g.at(3, 2) - t.skel.centers[3]).norm() <= 1.1e-6);
  r(0, 0) = 0.0;
  CHECK_THROWS_AS(skeleton_points(t.skel, r, t.poly.knots), ValidationError);
  r(0, 0) = -1.0;
  CHECK_THROWS_AS(skeleton_points(t.skel, r, t.poly.knots), ValidationError);
}

TEST_CASE("single radius perturbation moves exactly one control point") {
  auto t = helix_tube();
  Matrix r = Matrix::Ones(t.skel.n, t.skel.m);
  const auto base = skeleton_points(t.skel, r, t.poly.knots);
  r(2, 3) = 3.0;
  const auto moved = skeleton_points(t.skel, r, t.poly.knots);
  for (int i = 0; i < base.n; ++i)
    for (int j = 0; j < base.m; ++j) {
      const Vec3 d = moved.at(i, j) - base.at(i, j);
      if (i == 2 && j == 3)
        CHECK((d - 2.0 * t.skel.direction(2, 3)).norm() <= 1e-12);
      else
        CHECK(d.norm() == 0.0);
    }
}

TEST_CASE("surface closes along the radial seam") {
  std::mt19937_64 rng(2);
  auto t = helix_tube(12, 16);
  const auto g = skeleton_points(t.skel, random_radii(rng, 12, 16), t.poly.knots);
  for (int k = 0; k <= 40; ++k) {
    const double u = k / 40.0;
    CHECK((eval_surface(g, u, 0.0) - eval_surface(g, u, 1.0)).norm() <= 1e-10);
  }
}

TEST_CASE("unit weights give the plain tensor-product surface") {
  std::mt19937_64 rng(3);
  auto t = helix_tube(9, 8);
  const auto g = skeleton_points(t.skel, random_radii(rng, 9, 8), t.poly.knots);
  const auto& U = t.poly.knots.values;
  const auto& V = g.knots_v.values;
  const int cols = g.padded_cols();
  for (double u : {0.0, 0.13, 0.5, 0.91, 1.0})
    for (double v : {0.0, 0.07, 0.33, 0.8, 0.999}) {
      Vec3 ref = Vec3::Zero();
      const double uu = std::min(u, 1.0 - 1e-14);
      for (int i = 0; i < g.n; ++i)
        for (int p = 0; p < cols; ++p)
          ref += oracle::cox_de_boor(i, 3, uu, U) * oracle::cox_de_boor(p, 3, v, V) * g.padded(i, p);
      CHECK((eval_surface(g, uu, v) - ref).norm() <= 1e-10);
    }
}

TEST_CASE("straight tube cross sections follow the periodic cubic of the ring") {
  const int m = 16;
  auto t = straight_tube(6, m);
  const auto g = skeleton_points(t.skel, Matrix::Ones(6, m), t.poly.knots);
  // On a regular unit m-gon the uniform periodic cubic passes through radius
  // (2 + cos(2pi/m))/3 at the knots v = j/m and never leaves the unit disc.
  const double at_vertex = (2.0 + std::cos(2 * kPi / m)) / 3.0;
  for (int k = 0; k <= 64; ++k) {
    const double v = k / 64.0;
    const double u = 0.37;
    const Vec3 s = eval_surface(g, u, v);
    // Streamwise control rows are the section centers, not the curve control points.
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < 6; ++i) c += oracle::cox_de_boor(i, 3, u, t.poly.knots.values) * t.skel.centers[i];
    Points ring;
    for (int j = 0; j < m; ++j) ring.push_back(t.skel.direction(0, j));
    const Vec3 expect = oracle::periodic_cubic(ring, v);
    CHECK(((s - c) - expect).norm() <= 1e-9);
    const double ratio = (s - c).norm();
    CHECK(ratio <= 1.0 + 1e-12);
    if (k % 4 == 0) CHECK(std::abs(ratio - at_vertex) <= 1e-12);
  }
}

TEST_CASE("rigid motion equivariance") {
  std::mt19937_64 rng(4);
  const auto samples = oracle::helix(11, 2.5, 0.8, 0.9);
  const Matrix r = random_radii(rng, 11, 12);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const Vec3 shift(4, -2, 7);
  Points moved;
  for (const auto& p : samples) moved.push_back(R * p + shift);

  const auto pa = fit_curve(samples, 3);
  const auto pb = fit_curve(moved, 3);
  const auto ga = skeleton_points(build_skeleton(pa, 12), r, pa.knots);
  const auto gb = skeleton_points(build_skeleton(pb, 12), r, pb.knots);
  const auto ma = eval_mesh(ga, 20, 12);
  const auto mb = eval_mesh(gb, 20, 12);
  for (std::size_t k = 0; k < ma.vertices.size(); ++k)
    CHECK((R * ma.vertices[k] + shift - mb.vertices[k]).norm() <= 1e-9);
}

TEST_CASE("mesh counts and seam welding") {
  auto t = helix_tube(10, 8);
  const auto g = skeleton_points(t.skel, Matrix::Ones(10, 8), t.poly.knots);
  const auto small = eval_mesh(g, 2, 3);
  CHECK(small.vertices.size() == 6);
  CHECK(small.quads.size() == 3);
  CHECK(small.quads[2] == std::array<int, 4>{2, 0, 3, 5});

  const auto big = eval_mesh(g, 200, 80);
  CHECK(big.vertices.size() == 16000);
  CHECK(big.quads.size() == 199u * 80u);
  for (const auto& q : big.quads)
    for (int v : q) CHECK((v >= 0 && v < 16000));
  CHECK_THROWS_AS(eval_mesh(g, 1, 10), ValidationError);
}

TEST_CASE("stencil evaluation matches pointwise evaluation") {
  std::mt19937_64 rng(6);
  auto t = helix_tube(10, 16);
  const auto g = skeleton_points(t.skel, random_radii(rng, 10, 16), t.poly.knots);
  const auto mesh = eval_mesh(g, 25, 20);
  const auto us = mesh_u_params(25);
  const auto vs = mesh_v_params(20);
  for (int a = 0; a < 25; a += 3)
    for (int b = 0; b < 20; b += 4)
      CHECK((mesh.vertices[a * 20 + b] - eval_surface(g, us[a], vs[b])).norm() <= 1e-12);
}

TEST_CASE("surface evaluation rejects parameters outside the unit square") {
  auto t = helix_tube();
  const auto g = skeleton_points(t.skel, Matrix::Ones(10, 8), t.poly.knots);
  CHECK_THROWS_AS(eval_surface(g, 1.2, 0.5), DomainError);
  CHECK_THROWS_AS(eval_surface(g, 0.5, -0.1), DomainError);
}
