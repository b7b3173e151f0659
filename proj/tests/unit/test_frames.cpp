#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/geometry/frames.hpp"

using namespace vg;
using namespace vg::geometry;

TEST_CASE("initial radial direction") {
  const Vec3 w = initial_radial_direction(Vec3(0, 0, 1), Vec3(1, 0, 0));
  CHECK((w - Vec3(0, 1, 0)).norm() <= 1e-15);

  std::mt19937_64 rng(5);
  for (int s = 0; s < 50; ++s) {
    const auto p = oracle::random_points(rng, 2);
    const Vec3 t = p[0].normalized();
    const Vec3 w2 = initial_radial_direction(t, p[1]);
    CHECK(std::abs(w2.dot(t)) <= 1e-12);
    CHECK(std::abs(w2.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("parallel tangent and chord fall back to the least-aligned axis") {
  const Vec3 t = Vec3(0.1, 0.2, 1.0).normalized();
  const Vec3 w = initial_radial_direction(t, 3.0 * t);
  // least |t| component is x -> t x e_x
  CHECK((w - t.cross(Vec3::UnitX()).normalized()).norm() <= 1e-15);
  CHECK(std::abs(w.dot(t)) <= 1e-12);
  CHECK_THROWS_AS(initial_radial_direction(Vec3::Zero(), Vec3::UnitX()), DegenerateError);
}

TEST_CASE("rotation is right-handed about the axis") {
  const Vec3 r = rotate(Vec3::UnitX(), Vec3::UnitZ(), kPi / 2);
  CHECK((r - Vec3::UnitY()).norm() <= 1e-15);
}

TEST_CASE("radial directions, quarter turns") {
  Points t{Vec3::UnitZ()}, w{Vec3::UnitX()};
  const auto d = radial_directions(t, w, 4);
  REQUIRE(d.size() == 4);
  CHECK((d[0] - Vec3(1, 0, 0)).norm() <= 1e-15);
  CHECK((d[1] - Vec3(0, 1, 0)).norm() <= 1e-15);
  CHECK((d[2] - Vec3(-1, 0, 0)).norm() <= 1e-15);
  CHECK((d[3] - Vec3(0, -1, 0)).norm() <= 1e-15);
  CHECK_THROWS_AS(radial_directions(t, w, 2), ValidationError);
}

TEST_CASE("radial directions are unit, orthogonal and equally spaced") {
  std::mt19937_64 rng(9);
  Points ts, ws;
  for (int i = 0; i < 10; ++i) {
    const auto p = oracle::random_points(rng, 2);
    const Vec3 t = p[0].normalized();
    ts.push_back(t);
    ws.push_back((p[1] - p[1].dot(t) * t).normalized());
  }
  const int m = 16;
  const auto d = radial_directions(ts, ws, m);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < m; ++j) {
      const Vec3& a = d[i * m + j];
      const Vec3& b = d[i * m + (j + 1) % m];
      CHECK(std::abs(a.norm() - 1.0) <= 1e-10);
      CHECK(std::abs(a.dot(ts[i])) <= 1e-10);
      CHECK(std::abs(a.dot(b) - std::cos(2 * kPi / m)) <= 1e-10);
    }
}

namespace {

Points square_loop(const Vec3& c, int start) {
  // o = 4 points, clockwise about +z: +x, -y, -x, +y, cyclically starting at `start`.
  const Points base{Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)};
  Points out;
  for (int j = 0; j < 4; ++j) out.push_back(c + base[(j + start) % 4]);
  return out;
}

int brute_shift(const Points& prev, const Points& cur) {
  const int o = static_cast<int>(prev.size());
  int best = 0;
  double best_d = 1e300;
  for (int l = 0; l < o; ++l) {
    double d = 0;
    for (int j = 0; j < o; ++j) d += (prev[j] - cur[(j + l) % o]).norm();
    if (d < best_d - 1e-15) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("alignment: translated identical contours keep the index chain") {
  std::vector<Points> loops;
  Points centers;
  for (int i = 0; i < 5; ++i) {
    centers.push_back(Vec3(0, 0, i));
    loops.push_back(square_loop(centers.back(), 0));
  }
  const auto a = align_radial_frames(loops, centers, Vec3::UnitX());
  for (int i = 0; i < 5; ++i) {
    CHECK(a.shifts[i] == 0);
    CHECK(a.indices[i] == 0);
    CHECK((a.frame_w[i] - Vec3::UnitX()).norm() <= 1e-15);
  }
}

TEST_CASE("alignment: a one-index rotation is recovered") {
  std::vector<Points> loops;
  Points centers;
  for (int i = 0; i < 3; ++i) centers.push_back(Vec3(0, 0, i));
  // Section 1 lists the same geometric points starting one slot earlier.
  loops.push_back(square_loop(centers[0], 0));
  loops.push_back(square_loop(centers[1], 3));
  loops.push_back(square_loop(centers[2], 3));
  const auto a = align_radial_frames(loops, centers, Vec3::UnitX());
  CHECK(a.shifts[1] == brute_shift(loops[0], loops[1]));
  CHECK(a.shifts[1] == 1);
  CHECK(a.shifts[2] == 0);
}

TEST_CASE("alignment: hand replay on o=4 squares") {
  // Section 0 starts at +y so j0* = 3 for w0 = +y. Section 1 starts at -x (shift 2 relative
  // to section 0): l* = 2, j1* = (3+2)%4 = 1 -> the point +y of section 1.
  // Section 2 is section 1 turned a quarter clockwise; the shift is checked against brute force.
  std::vector<Points> loops;
  Points centers{Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 2)};
  loops.push_back(square_loop(centers[0], 0));
  loops.push_back(square_loop(centers[1], 2));
  Points rotated;
  for (const auto& p : square_loop(centers[2], 2)) {
    const Vec3 r = p - centers[2];
    rotated.push_back(centers[2] + Vec3(r.y(), -r.x(), 0));  // clockwise quarter turn
  }
  loops.push_back(rotated);
  const auto a = align_radial_frames(loops, centers, Vec3::UnitY());
  CHECK(a.indices[0] == 3);
  CHECK(a.shifts[1] == 2);
  CHECK(a.indices[1] == 1);
  CHECK((a.frame_w[1] - Vec3::UnitY()).norm() <= 1e-15);
  const int l2 = brute_shift(loops[1], loops[2]);
  CHECK(a.shifts[2] == l2);
  CHECK(a.indices[2] == (1 + l2) % 4);
  CHECK((a.frame_w[2] - (loops[2][a.indices[2]] - centers[2]).normalized()).norm() <= 1e-15);
}

TEST_CASE("alignment rejects mismatched point counts") {
  std::vector<Points> loops{square_loop(Vec3::Zero(), 0), Points(3, Vec3::UnitX())};
  Points centers{Vec3::Zero(), Vec3::UnitZ()};
  CHECK_THROWS_AS(align_radial_frames(loops, centers, Vec3::UnitX()), ValidationError);
}

TEST_CASE("unit contours are clockwise about the tangent") {
  Points c{Vec3::Zero()}, t{Vec3::UnitZ()};
  const auto st = unit_contours(c, t, Vec3::UnitX(), 4);
  CHECK((st.loops[0][0] - Vec3(1, 0, 0)).norm() <= 1e-15);
  CHECK((st.loops[0][1] - Vec3(0, -1, 0)).norm() <= 1e-15);
}

TEST_CASE("skeleton of a helix satisfies frame invariants") {
  const auto poly = fit_curve(oracle::helix(14), 3);
  const int m = 12;
  const auto skel = build_skeleton(poly, m);
  REQUIRE(skel.n == 14);
  for (int i = 0; i < skel.n; ++i) {
    CHECK(std::abs(skel.tangents[i].norm() - 1.0) <= 1e-10);
    for (int j = 0; j < m; ++j) {
      const Vec3& w = skel.direction(i, j);
      CHECK(std::abs(w.norm() - 1.0) <= 1e-10);
      CHECK(std::abs(w.dot(skel.tangents[i])) <= 1e-10);
      const double ang = std::acos(std::clamp(w.dot(skel.direction(i, (j + 1) % m)), -1.0, 1.0));
      CHECK(std::abs(ang - 2 * kPi / m) <= 1e-8);
    }
  }
}
