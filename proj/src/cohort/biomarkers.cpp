#include "vesselgen/cohort/biomarkers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vesselgen/core/error.hpp"
#include "vesselgen/geometry/bspline.hpp"

namespace vg::cohort {
namespace {

std::vector<double> cumulative_length(PointSpan p) {
  std::vector<double> s(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) s[i] = s[i - 1] + (p[i] - p[i - 1]).norm();
  return s;
}

double interp(std::span<const double> x, std::span<const double> y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  const double f = (t - x[k - 1]) / std::max(x[k] - x[k - 1], 1e-300);
  return (1 - f) * y[k - 1] + f * y[k];
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

}  // namespace

BiomarkerTable biomarkers(PointSpan cl, std::span<const double> frac, std::span<const double> radius) {
  require(cl.size() >= 3, "biomarkers need at least three centerline points");
  require(!frac.empty() && frac.size() == radius.size(), "section fractions and radii must pair up");
  const auto s = cumulative_length(cl);
  const double L = s.back();
  const Vec3 chord = cl.back() - cl.front();
  if (L <= 0 || chord.norm() <= 1e-12 * std::max(L, 1.0)) throw DegenerateError("centerline has no extent");

  BiomarkerTable t;
  t.tortuosity = L / chord.norm();
  t.LPD = 0.9 * L;
  t.PA = interp(frac, radius, 0.1);
  t.PD = interp(frac, radius, 0.9);

  const Vec3 dir = chord.normalized();
  std::vector<double> dist(cl.size());
  for (std::size_t i = 0; i < cl.size(); ++i) {
    const Vec3 d = cl[i] - cl.front();
    dist[i] = (d - d.dot(dir) * dir).norm();
  }
  const auto apex = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  t.h = dist[apex];
  if (t.h <= 1e-9 * L) {
    t.h = 0;
    t.PT = interp(frac, radius, 0.5);
  } else {
    t.PT = interp(frac, radius, s[apex] / L);
    const double half = 0.5 * t.h;
    auto crossing = [&](int step) {
      for (long i = static_cast<long>(apex); i + step >= 0 && i + step < static_cast<long>(cl.size()); i += step) {
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(i + step);
        if (dist[b] <= half) {
          const double f = (dist[a] - half) / std::max(dist[a] - dist[b], 1e-300);
          return Vec3((1 - f) * cl[a] + f * cl[b]);
        }
      }
      return Vec3(step < 0 ? cl.front() : cl.back());
    };
    t.w = (crossing(1) - crossing(-1)).norm();
    t.h_over_w = t.w > 0 ? t.h / t.w : 0.0;
  }

  double mean = 0;
  for (double r : radius) mean += r;
  mean /= static_cast<double>(radius.size());
  double var = 0;
  for (double r : radius) var += (r - mean) * (r - mean);
  t.radius_sd = std::sqrt(var / static_cast<double>(radius.size()));
  return t;
}

BiomarkerTable biomarkers(const geometry::Latent& z) {
  const auto poly = geometry::make_polygon(z.control_points);
  const int N = 400;
  Points cl;
  std::vector<double> us;
  for (int k = 0; k < N; ++k) {
    us.push_back(static_cast<double>(k) / (N - 1));
    cl.push_back(geometry::eval_curve(poly, us.back()));
  }
  const auto s = cumulative_length(cl);
  std::vector<double> frac, radius;
  for (int i = 0; i < poly.size(); ++i) {
    frac.push_back(interp(us, s, poly.params[static_cast<std::size_t>(i)]) / s.back());
    radius.push_back(z.radii.row(i).mean());
  }
  return biomarkers(cl, frac, radius);
}

BiomarkerTable biomarkers(const geometry::QuadMesh& mesh) {
  require(mesh.res_u >= 3 && mesh.res_v >= 3 &&
              mesh.vertices.size() == static_cast<std::size_t>(mesh.res_u) * static_cast<std::size_t>(mesh.res_v),
          "mesh biomarkers need a lattice mesh");
  Points cl;
  std::vector<double> radius;
  for (int i = 0; i < mesh.res_u; ++i) {
    const auto row = PointSpan(mesh.vertices).subspan(static_cast<std::size_t>(i * mesh.res_v),
                                                      static_cast<std::size_t>(mesh.res_v));
    cl.push_back(centroid(row));
    double r = 0;
    for (const auto& p : row) r += (p - cl.back()).norm();
    radius.push_back(r / mesh.res_v);
  }
  auto frac = cumulative_length(cl);
  for (auto& f : frac) f /= frac.back() > 0 ? frac.back() : 1.0;
  return biomarkers(cl, frac, radius);
}

std::string biomarkers_to_csv(const std::vector<BiomarkerTable>& rows, const std::vector<std::string>& ids) {
  std::ostringstream o;
  o << "id";
  for (const char* n : kBiomarkerNames) o << ',' << n;
  o << '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    o << (k < ids.size() ? ids[k] : std::to_string(k));
    for (double v : rows[k].values()) o << ',' << fmt(v);
    o << '\n';
  }
  return o.str();
}

double quantile(std::vector<double> x, double q) {
  require(!x.empty(), "quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "KS statistic needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::vector<MarkerComparison> compare_distributions(const std::vector<BiomarkerTable>& a,
                                                    const std::vector<BiomarkerTable>& b) {
  require(a.size() >= 5 && b.size() >= 5, "distribution comparison needs at least five samples per side");
  std::vector<MarkerComparison> out;
  for (std::size_t m = 0; m < kBiomarkerNames.size(); ++m) {
    std::vector<double> xa, xb;
    for (const auto& t : a) xa.push_back(t.values()[m]);
    for (const auto& t : b) xb.push_back(t.values()[m]);
    MarkerComparison c;
    c.name = kBiomarkerNames[m];
    c.median_a = quantile(xa, 0.5);
    c.iqr_a = quantile(xa, 0.75) - quantile(xa, 0.25);
    c.median_b = quantile(xb, 0.5);
    c.iqr_b = quantile(xb, 0.75) - quantile(xb, 0.25);
    c.ks = ks_statistic(xa, xb);
    out.push_back(c);
  }
  return out;
}

Json comparison_to_json(const std::vector<MarkerComparison>& c) {
  Json j = Json::array();
  for (const auto& m : c)
    j.push_back(Json{{"name", m.name}, {"median_a", m.median_a}, {"iqr_a", m.iqr_a},
                     {"median_b", m.median_b}, {"iqr_b", m.iqr_b}, {"ks", m.ks}});
  return j;
}

std::string comparison_to_csv(const std::vector<MarkerComparison>& c) {
  std::ostringstream o;
  o << "biomarker,median_a,iqr_a,median_b,iqr_b,ks\n";
  for (const auto& m : c)
    o << m.name << ',' << fmt(m.median_a) << ',' << fmt(m.iqr_a) << ',' << fmt(m.median_b) << ',' << fmt(m.iqr_b) << ','
      << fmt(m.ks) << '\n';
  return o.str();
}

}  // namespace vg::cohort
