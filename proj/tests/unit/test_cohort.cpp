#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "vesselgen/cohort/biomarkers.hpp"
#include "vesselgen/cohort/branching.hpp"
#include "vesselgen/cohort/encode.hpp"
#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/cohort/synthetic.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/fitting/chamfer.hpp"

using namespace vg;
using namespace vg::cohort;
namespace fs = std::filesystem;

namespace {

// Scans every pooled value and compares the two empirical CDFs directly.
double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  double d = 0;
  for (double x : pooled) {
    const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= x; })) / a.size();
    const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= x; })) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vg_cohort_" + name);
  fs::remove_all(p);
  return p;
}

double bbox_diag2(const Points& pts) {
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  return (hi - lo).squaredNorm();
}

geometry::Latent straight_tube(int n, int m, double r) {
  Points C;
  for (int i = 0; i < n; ++i) C.emplace_back(0, 0, 10.0 * i);
  return {C, Matrix::Constant(n, m, r)};
}

}  // namespace

TEST_CASE("presets and defaults") {
  const auto& a = preset("aorta");
  CHECK(a.n == 16);
  CHECK(a.m == 21);
  CHECK(a.res_u == 200);
  CHECK(a.res_v == 80);
  CHECK(preset("RCCA").n == 8);
  CHECK(preset("aorta32").m == 32);
  CHECK_THROWS_AS(preset("femoral"), ValidationError);

  const Json cfg = default_pipeline_config();
  CHECK(cfg["schedule"]["T"] == 1000);
  CHECK(cfg["train"]["learning_rate"].get<double>() == 8e-5);
  CHECK(cfg["train"]["batch_size"] == 110);
  CHECK(cfg["sampling"]["centerline"]["batch"] == 50);
  const Json merged = merge_config(cfg, Json{{"train", {{"batch_size", 12}}}});
  CHECK(merged["train"]["batch_size"] == 12);
  CHECK(merged["train"]["learning_rate"].get<double>() == 8e-5);

  // Latent size is a small fraction of the mesh.
  CHECK(a.n * 3 + a.n * a.m < a.res_u * a.res_v / 10);
}

TEST_CASE("ingest recenters, orients and round-trips through files") {
  Points cl;
  for (int k = 0; k < 20; ++k) cl.emplace_back(1.0 + k, 2.0, 3.0 + 0.5 * k);
  const auto mesh = decode_vessel(straight_tube(8, 12, 2.0), 30, 12);
  geometry::QuadMesh shifted = mesh;
  for (auto& v : shifted.vertices) v += Vec3(5, -3, 7);

  const auto r = make_record("LSA", cl, shifted);
  CHECK(centroid(r.surface.vertices).norm() <= 1e-9);
  CHECK_FALSE(r.flipped);
  CHECK((r.offset - (centroid(mesh.vertices) + Vec3(5, -3, 7))).norm() <= 1e-9);

  Points reversed(cl.rbegin(), cl.rend());
  IngestOptions opt;
  opt.orientation = Orientation::lowest_first;
  const auto rf = make_record("LSA", reversed, shifted, opt);
  CHECK(rf.flipped);
  CHECK((rf.centerline.front() - r.centerline.front()).norm() <= 1e-12);
  CHECK_FALSE(make_record("LSA", cl, shifted, opt).flipped);
  opt.orientation = Orientation::reverse;
  CHECK(make_record("LSA", cl, shifted, opt).flipped);

  const auto dir = temp_dir("ingest");
  const auto [cf, sf] = export_record(r, dir, "x");
  const auto again = ingest(cf, sf, "LSA");
  CHECK(again.offset.norm() <= 1e-9);
  CHECK(again.surface.quads == r.surface.quads);
  for (std::size_t i = 0; i < r.surface.vertices.size(); ++i)
    CHECK((again.surface.vertices[i] - r.surface.vertices[i]).norm() <= 1e-9);

  CHECK_THROWS_AS(make_record("LSA", cl, geometry::QuadMesh{}), ValidationError);
  CHECK_THROWS_AS(make_record("femoral", cl, shifted), ValidationError);
  CHECK_THROWS_AS(ingest(dir / "missing.csv", sf, "LSA"), Error);
  fs::remove_all(dir);
}

TEST_CASE("synthetic cohort: deterministic, valid, diverse") {
  const auto a = make_synthetic_cohort(3, 5);
  const auto b = make_synthetic_cohort(3, 5);
  CHECK(a.size() == 5);
  for (const auto& br : kBranches) {
    REQUIRE(a.branch(br).size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& r = a.branch(br)[k];
      CHECK(r.surface.vertices == b.branch(br)[k].surface.vertices);
      CHECK(r.latent.has_value());
      CHECK(r.latent->radii.minCoeff() > 0);
      CHECK(r.latent->radii.rows() == preset(br).n);
      CHECK(r.latent->radii.cols() == preset(br).m);
      CHECK(static_cast<int>(r.surface.vertices.size()) == preset(br).res_u * preset(br).res_v);
      for (const auto& v : r.surface.vertices) CHECK(v.allFinite());
      // Lowest end first.
      CHECK(r.centerline.front().z() < r.centerline.back().z());
      // Latent and surface share the recentered frame.
      const auto decoded = decode_vessel(*r.latent, preset(br));
      CHECK((decoded.vertices[17] - r.surface.vertices[17]).norm() <= 1e-9);
    }
  }
  for (const auto& t : a.topologies)
    for (double e : t.e) CHECK((e > 0 && e < 1));
  CHECK(fitting::chamfer(a.branch("aorta")[0].surface.vertices, a.branch("aorta")[1].surface.vertices).value > 1.0);
  CHECK(make_synthetic_cohort(4, 5).branch("aorta")[0].surface.vertices != a.branch("aorta")[0].surface.vertices);
  CHECK_THROWS_AS(make_synthetic_cohort(3, 1), ValidationError);

  const auto d1 = temp_dir("save1"), d2 = temp_dir("save2");
  save_cohort(a, d1);
  save_cohort(b, d2);
  CHECK(read_text(d1 / "manifest.json") == read_text(d2 / "manifest.json"));
  CHECK(read_text(d1 / "syn002" / "aorta_surface.obj") == read_text(d2 / "syn002" / "aorta_surface.obj"));
  const auto loaded = load_cohort(d1);
  CHECK(loaded.size() == 5);
  CHECK(loaded.branch("RSA")[3].latent.has_value());
  CHECK((loaded.branch("RSA")[3].latent->control_points[2] - a.branch("RSA")[3].latent->control_points[2]).norm() <=
        1e-9);
  CHECK(loaded.topologies[4].e == a.topologies[4].e);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("encode then decode stays within the round-trip tolerance") {
  const auto c = make_synthetic_cohort(11, 5);
  for (const auto& br : {"aorta", "RCCA"}) {
    const auto& r = c.branch(br)[1];
    const auto enc = encode_vessel(r, preset(br));
    CHECK(static_cast<int>(enc.latent.control_points.size()) == preset(br).n);
    const auto mesh = decode_vessel(enc.latent, preset(br));
    const double ch = fitting::chamfer(mesh.vertices, r.surface.vertices).value;
    CHECK(ch < 1e-3 * bbox_diag2(r.surface.vertices));
  }
}

TEST_CASE("branching statistics") {
  std::vector<BranchTopology> constant(6);
  for (auto& t : constant) t.e = {0.3, 0.45, 0.38, 0.27};
  const auto gc = fit_branching(constant);
  for (const auto& t : sample_branching(gc, 50, 1))
    for (int i = 0; i < 4; ++i) CHECK(std::abs(t.e[static_cast<std::size_t>(i)] - constant[0].e[static_cast<std::size_t>(i)]) < 1e-4);

  const auto c = make_synthetic_cohort(5, 30);
  const auto g = fit_branching(c.topologies);
  int clamped = -1;
  const auto draws = sample_branching(g, 5000, 9, &clamped);
  CHECK(clamped == 0);  // training e in [0.2, 0.8] with sd ~0.02: bounds are > 8 sd away
  for (int i = 0; i < 4; ++i) {
    double mean = 0;
    for (const auto& t : draws) mean += t.e[static_cast<std::size_t>(i)];
    mean /= 5000;
    const double se = std::sqrt(g.covariance(i, i) / 5000);
    CHECK(std::abs(mean - g.mean(i)) <= 3 * se);
  }

  baselines::GaussianModel wide = g;
  wide.factor = Matrix::Identity(4, 4);
  sample_branching(wide, 100, 2, &clamped);
  CHECK(clamped > 0);
  for (const auto& t : sample_branching(wide, 100, 2))
    for (double e : t.e) CHECK((e >= kBranchClampLo && e <= kBranchClampHi));
  CHECK_THROWS_AS(fit_branching({constant[0]}), ValidationError);
}

TEST_CASE("assembly places branch roots on the aorta") {
  const auto c = make_synthetic_cohort(6, 5);
  std::map<std::string, geometry::QuadMesh> v1, v2;
  for (const auto& b : kBranches) v1[b] = c.branch(b)[0].surface;
  for (auto it = kBranches.rbegin(); it != kBranches.rend(); ++it) v2.emplace(*it, c.branch(*it)[0].surface);
  const auto& topo = c.topologies[0];
  const auto s1 = assemble(v1, topo);
  const auto s2 = assemble(v2, topo);
  for (const auto& b : kTopologyOrder) {
    CHECK(s1.meshes.at(b).vertices == s2.meshes.at(b).vertices);
    const auto at = attachment(s1.meshes.at("aorta"), topo.at(b));
    const auto rf = root_frame(s1.meshes.at(b));
    CHECK((rf.center - at.point).norm() <= 1e-8);
    CHECK(rf.direction.dot(at.outward) > 1 - 1e-9);
    CHECK(std::abs(at.outward.dot(at.tangent)) < 1e-9);
  }
  for (const auto& j : s1.junctions) {
    CHECK(j.depth > 0);
    CHECK_FALSE(j.detached);
  }
  // The arch apex region points away from the inlet-outlet chord (+z here).
  CHECK(attachment(s1.meshes.at("aorta"), 0.5).outward.z() > 0.5);

  // Outlier: push one branch far outside the parent.
  auto moved = s1.meshes.at("LSA");
  const auto at = attachment(s1.meshes.at("aorta"), topo.at("LSA"));
  for (auto& p : moved.vertices) p += 60.0 * at.outward;
  const auto info = junction_info(s1.meshes.at("aorta"), "LSA", topo.at("LSA"), moved);
  CHECK(info.detached);
  CHECK(info.depth < -info.root_radius);

  BranchTopology bad = topo;
  bad.e[0] = 1.2;
  CHECK_THROWS_AS(assemble(v1, bad), ValidationError);
}

TEST_CASE("biomarkers: degenerate cylinder, semicircle oracle, bulge, rigid motion") {
  const auto tube = straight_tube(16, 21, 5.0);
  const auto bt = biomarkers(tube);
  CHECK(bt.tortuosity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bt.radius_sd <= 1e-12);
  CHECK(bt.h == 0.0);
  CHECK(bt.PA == doctest::Approx(5.0));
  CHECK(bt.LPD == doctest::Approx(0.9 * 150.0).epsilon(1e-9));

  // Semicircle of radius rho: tortuosity pi/2, apex height rho, w = sqrt(3) rho.
  const double rho = 20.0;
  Points arc;
  for (int k = 0; k <= 2000; ++k) {
    const double a = kPi * k / 2000;
    arc.emplace_back(rho * (1 - std::cos(a)), 0, rho * std::sin(a));
  }
  const std::vector<double> fr = {0.0, 1.0}, rr = {4.0, 2.0};
  const auto sc = biomarkers(arc, fr, rr);
  CHECK(std::abs(sc.tortuosity - kPi / 2) < 1e-5);
  CHECK(std::abs(sc.h - rho) < 1e-3);
  CHECK(std::abs(sc.w - std::sqrt(3.0) * rho) < 1e-2);
  CHECK(std::abs(sc.PT - 3.0) < 1e-3);
  CHECK(std::abs(sc.PA - 3.8) < 1e-9);

  geometry::Latent bulged = tube;
  bulged.radii.row(7).array() += 3.0;
  CHECK(biomarkers(bulged).radius_sd > bt.radius_sd);

  const auto c = make_synthetic_cohort(8, 5);
  const auto z = *c.branch("aorta")[2].latent;
  const auto b0 = biomarkers(z);
  CHECK(b0.h > 0);
  CHECK(b0.w > 0);
  CHECK(b0.tortuosity >= 1.0);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  geometry::Latent moved = z;
  for (auto& p : moved.control_points) p = R * p + Vec3(3, -9, 40);
  const auto b1 = biomarkers(moved);
  for (std::size_t k = 0; k < 9; ++k) CHECK(std::abs(b1.values()[k] - b0.values()[k]) <= 1e-8 * (1 + std::abs(b0.values()[k])));

  const auto bm = biomarkers(decode_vessel(z, preset("aorta")));
  CHECK(bm.tortuosity == doctest::Approx(b0.tortuosity).epsilon(0.02));

  Points dot{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  CHECK_THROWS_AS(biomarkers(dot, fr, rr), DegenerateError);
}

TEST_CASE("distribution comparison and KS oracle") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<BiomarkerTable> a(40), b(33);
  for (auto& t : a) t = {n(rng), n(rng), n(rng), n(rng), n(rng), n(rng), n(rng), 1 + std::abs(n(rng)), std::abs(n(rng))};
  for (auto& t : b) t = {n(rng) + 0.5, n(rng), n(rng), n(rng), n(rng), n(rng), n(rng), 1 + std::abs(n(rng)), 0.1};

  for (const auto& m : compare_distributions(a, a)) CHECK(m.ks == 0.0);
  const auto cmp = compare_distributions(a, b);
  for (std::size_t k = 0; k < 9; ++k) {
    std::vector<double> xa, xb;
    for (const auto& t : a) xa.push_back(t.values()[k]);
    for (const auto& t : b) xb.push_back(t.values()[k]);
    CHECK(std::abs(cmp[k].ks - ks_oracle(xa, xb)) <= 1e-12);
  }
  // Ties inside and across samples.
  const std::vector<double> ta = {1, 1, 2, 2, 3}, tb = {1, 2, 2, 2, 5, 5};
  CHECK(std::abs(ks_statistic(ta, tb) - ks_oracle(ta, tb)) <= 1e-12);

  std::vector<BiomarkerTable> lo(6), hi(6);
  for (std::size_t k = 0; k < 6; ++k) {
    lo[k].PA = static_cast<double>(k);
    hi[k].PA = 100.0 + static_cast<double>(k);
  }
  CHECK(compare_distributions(lo, hi)[0].ks == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(compare_distributions(lo, std::vector<BiomarkerTable>(4)), ValidationError);
  CHECK(comparison_to_csv(cmp).rfind("biomarker,median_a", 0) == 0);
}
