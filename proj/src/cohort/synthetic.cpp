#include "vesselgen/cohort/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vesselgen/cohort/encode.hpp"
#include "vesselgen/cohort/presets.hpp"
#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"
#include "vesselgen/geometry/bspline.hpp"

namespace vg::cohort {

double BranchTopology::at(const std::string& branch) const {
  for (std::size_t i = 0; i < kTopologyOrder.size(); ++i)
    if (kTopologyOrder[i] == branch) return e[i];
  throw ValidationError("branch '" + branch + "' has no bifurcation location");
}

const std::vector<VesselRecord>& Cohort::branch(const std::string& b) const {
  const auto it = records.find(b);
  require(it != records.end(), "cohort has no records for branch '" + b + "'");
  return it->second;
}

Json topology_to_json(const BranchTopology& t) {
  Json j = Json::object();
  for (std::size_t i = 0; i < kTopologyOrder.size(); ++i) j[kTopologyOrder[i]] = t.e[i];
  return j;
}

BranchTopology topology_from_json(const Json& j) {
  BranchTopology t;
  for (std::size_t i = 0; i < kTopologyOrder.size(); ++i) t.e[i] = j.at(kTopologyOrder[i]).get<double>();
  return t;
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double normal(Rng& rng, double sd) { return std::normal_distribution<double>(0.0, sd)(rng); }

struct Shape {
  Points polyline;
  std::vector<double> radius;  // per section
  double ellipticity = 0.0;
  double phase = 0.0;
};

Shape aorta_shape(Rng& rng, int n) {
  Shape s;
  const double Ha = uniform(rng, 30, 45);
  const double rho = uniform(rng, 12, 18);
  const double Hd = Ha * uniform(rng, 0.55, 0.85);
  const double lift = uniform(rng, -4, 4);   // out-of-plane arch sway
  const double drift = uniform(rng, -3, 3);  // descending x drift
  const double lean = uniform(rng, -0.15, 0.15);
  for (int k = 0; k < 60; ++k) {
    const double z = Ha * k / 60.0;
    s.polyline.emplace_back(lean * z * z / Ha, 0.0, z);
  }
  const Vec3 top = Vec3(lean * Ha, 0.0, Ha);
  for (int k = 0; k <= 120; ++k) {
    const double a = kPi * k / 120.0;
    s.polyline.push_back(top + Vec3(rho * (1 - std::cos(a)), lift * std::sin(a), rho * std::sin(a)));
  }
  const Vec3 end = s.polyline.back();
  for (int k = 1; k <= 60; ++k) {
    const double f = k / 60.0;
    s.polyline.push_back(end + Vec3(drift * f * f, 0.0, -Hd * f));
  }

  const double r0 = uniform(rng, 11, 15);
  const double taper = uniform(rng, 0.25, 0.4);
  const bool bulge = uniform(rng, 0, 1) < 0.3;
  const double amp = bulge ? uniform(rng, 0.15, 0.4) : 0.0;
  const double centre = uniform(rng, 0.1, 0.35);
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    const double g = (f - centre) / 0.08;
    s.radius.push_back(r0 * (1 - taper * f) * (1 + amp * std::exp(-0.5 * g * g)));
  }
  s.ellipticity = uniform(rng, 0.0, 0.08);
  s.phase = uniform(rng, 0.0, kPi);
  return s;
}

Shape branch_shape(Rng& rng, const std::string& branch, int n) {
  double length = 40, r0 = 4;
  if (branch == "RCCA") length = 35, r0 = 3.5;
  if (branch == "LCCA") length = 45, r0 = 4.0;
  if (branch == "LSA") length = 45, r0 = 5.0;
  if (branch == "RSA") length = 35, r0 = 4.5;
  length *= uniform(rng, 0.85, 1.15);
  r0 *= uniform(rng, 0.85, 1.15);
  const double kx = uniform(rng, -0.3, 0.3) / length;
  const double ky = uniform(rng, -0.3, 0.3) / length;
  Shape s;
  for (int k = 0; k <= 100; ++k) {
    const double z = length * k / 100.0;
    s.polyline.emplace_back(kx * z * z, ky * z * z, z);
  }
  const double taper = uniform(rng, 0.15, 0.3);
  for (int i = 0; i < n; ++i) s.radius.push_back(r0 * (1 - taper * static_cast<double>(i) / (n - 1)));
  s.ellipticity = uniform(rng, 0.0, 0.05);
  s.phase = uniform(rng, 0.0, kPi);
  return s;
}

VesselRecord synthesize(const Shape& s, const BranchPreset& p, const std::string& id) {
  const auto poly = geometry::fit_curve(geometry::resample_arc_length(s.polyline, p.n));
  Matrix R(p.n, p.m);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.m; ++j) {
      const double theta = 2 * kPi * j / p.m;
      R(i, j) = s.radius[static_cast<std::size_t>(i)] * (1 + s.ellipticity * std::cos(2 * (theta - s.phase)));
    }
  geometry::Latent z{poly.points, R};
  Points centerline;
  for (int k = 0; k < 100; ++k) centerline.push_back(geometry::eval_curve(poly, k / 99.0));
  IngestOptions opt;
  opt.id = id;
  VesselRecord r = make_record(p.branch, std::move(centerline), decode_vessel(z, p), opt);
  for (auto& c : z.control_points) c -= r.offset;
  r.latent = std::move(z);
  return r;
}

}  // namespace

Cohort make_synthetic_cohort(std::uint64_t seed, int count) {
  require(count >= kMinCohortSize, "a cohort needs at least " + std::to_string(kMinCohortSize) + " members");
  Cohort c;
  c.seed = seed;
  for (int k = 0; k < count; ++k) {
    char id[16];
    std::snprintf(id, sizeof id, "syn%03d", k);
    c.ids.emplace_back(id);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(k));
    for (const auto& b : kBranches) {
      const auto& p = preset(b);
      const Shape s = b == "aorta" ? aorta_shape(rng, p.n) : branch_shape(rng, b, p.n);
      c.records[b].push_back(synthesize(s, p, id));
    }
    // RCCA and RSA leave near the start of the arch, LCCA and LSA further along; one shared
    // shift makes the four locations correlated.
    const std::array<double, 4> mean = {0.30, 0.45, 0.38, 0.27};
    const double shift = normal(rng, 0.02);
    BranchTopology t;
    for (std::size_t i = 0; i < 4; ++i) t.e[i] = std::clamp(mean[i] + shift + normal(rng, 0.01), 0.05, 0.95);
    c.topologies.push_back(t);
  }
  return c;
}

Json save_cohort(const Cohort& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json members = Json::array();
  for (std::size_t k = 0; k < c.size(); ++k) {
    Json files = Json::object();
    for (const auto& [b, recs] : c.records) {
      const auto& r = recs[k];
      const auto [cl, sf] = export_record(r, dir / c.ids[k], b);
      Json entry{{"centerline", std::filesystem::relative(cl, dir).string()},
                 {"surface", std::filesystem::relative(sf, dir).string()}};
      if (r.latent) {
        const auto lp = dir / c.ids[k] / (b + "_latent.json");
        write_json(lp, geometry::latent_to_json(*r.latent));
        entry["latent"] = std::filesystem::relative(lp, dir).string();
      }
      files[b] = entry;
    }
    members.push_back(Json{{"id", c.ids[k]}, {"topology", topology_to_json(c.topologies[k])}, {"branches", files}});
  }
  Json presets = Json::object();
  for (const auto& p : branch_presets()) presets[p.branch] = preset_to_json(p);
  Json manifest{{"seed", c.seed}, {"count", c.size()}, {"presets", presets}, {"members", members}};
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

Cohort load_cohort(const std::filesystem::path& dir) {
  const Json manifest = read_json(dir / "manifest.json");
  Cohort c;
  c.seed = manifest.value("seed", std::uint64_t{0});
  for (const auto& m : manifest.at("members")) {
    const std::string id = m.at("id").get<std::string>();
    c.ids.push_back(id);
    c.topologies.push_back(topology_from_json(m.at("topology")));
    for (const auto& [b, entry] : m.at("branches").items()) {
      IngestOptions opt;
      opt.id = id;
      VesselRecord r = ingest(dir / entry.at("centerline").get<std::string>(),
                              dir / entry.at("surface").get<std::string>(), b, opt);
      if (entry.contains("latent")) {
        auto z = geometry::latent_from_json(read_json(dir / entry.at("latent").get<std::string>()));
        for (auto& p : z.control_points) p -= r.offset;
        r.latent = std::move(z);
      }
      c.records[b].push_back(std::move(r));
    }
  }
  require(c.size() > 0, "cohort manifest lists no members");
  return c;
}

}  // namespace vg::cohort
