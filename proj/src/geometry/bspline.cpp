#include "vesselgen/geometry/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vesselgen/core/error.hpp"

namespace vg::geometry {

namespace {
constexpr double kDomainSlack = 1e-12;
}

KnotVector KnotVector::averaged(std::span<const double> params, int degree) {
  const int n = static_cast<int>(params.size());
  require(degree >= 0 && degree <= kMaxDegree, "unsupported spline degree");
  require(n >= degree + 1, "need at least degree+1 parameters for knot averaging");
  KnotVector k;
  k.degree = degree;
  k.clamped = true;
  k.values.assign(static_cast<std::size_t>(n + degree + 1), 0.0);
  for (int i = 0; i <= degree; ++i) k.values[static_cast<std::size_t>(n + i)] = 1.0;
  for (int j = 1; j <= n - degree - 1; ++j) {
    double sum = 0.0;
    for (int i = j; i < j + degree; ++i) sum += params[static_cast<std::size_t>(i)];
    k.values[static_cast<std::size_t>(j + degree)] = sum / degree;
  }
  return k;
}

KnotVector KnotVector::periodic(int m, int degree) {
  require(m >= 3, "radial count m must be at least 3");
  require(degree >= 1 && degree <= kMaxDegree, "unsupported spline degree");
  KnotVector k;
  k.degree = degree;
  k.clamped = false;
  const double du = 1.0 / m;
  for (int i = -degree; i <= m + 1 + degree; ++i) k.values.push_back(i * du);
  return k;
}

void KnotVector::validate() const {
  require(degree >= 0 && degree <= kMaxDegree, "unsupported spline degree " + std::to_string(degree));
  require(values.size() >= static_cast<std::size_t>(2 * degree + 2), "knot vector too short for its degree");
  for (std::size_t i = 1; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "non-finite knot");
    require(values[i] >= values[i - 1], "knot vector must be non-decreasing");
  }
  require(domain_end() > domain_begin(), "knot vector has an empty domain");
}

int KnotVector::find_span(double u) const {
  const int last = control_count() - 1;
  if (u >= values[static_cast<std::size_t>(last + 1)]) {
    int k = last;
    while (k > degree && values[static_cast<std::size_t>(k)] >= values[static_cast<std::size_t>(k + 1)]) --k;
    return k;
  }
  if (u <= values[static_cast<std::size_t>(degree)]) {
    int k = degree;
    while (k < last && values[static_cast<std::size_t>(k + 1)] <= u) ++k;
    return k;
  }
  const auto first = values.begin() + degree;
  const auto stop = values.begin() + last + 2;
  const auto it = std::upper_bound(first, stop, u);
  return static_cast<int>(it - values.begin()) - 1;
}

namespace {

double check_domain(double u, const KnotVector& knots) {
  const double a = knots.domain_begin();
  const double b = knots.domain_end();
  if (!(u >= a - kDomainSlack && u <= b + kDomainSlack))
    throw DomainError("parameter " + std::to_string(u) + " outside knot domain [" + std::to_string(a) + ", " +
                      std::to_string(b) + "]");
  return std::clamp(u, a, b);
}

}  // namespace

// Piegl & Tiller A2.2 (triangular Cox-de Boor evaluation of the nonzero functions).
BasisValues basis_functions(double u, const KnotVector& knots) {
  knots.validate();
  u = check_domain(u, knots);
  const int p = knots.degree;
  const int span = knots.find_span(u);
  const auto& U = knots.values;
  BasisValues out;
  out.start = span - p;
  out.count = p + 1;
  std::array<double, kMaxDegree + 1> left{}, right{};
  out.values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = u - U[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = U[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = denom == 0.0 ? 0.0 : out.values[static_cast<std::size_t>(r)] / denom;
      out.values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    out.values[static_cast<std::size_t>(j)] = saved;
  }
  return out;
}

BasisDerivatives basis_derivatives(double u, const KnotVector& knots) {
  knots.validate();
  u = check_domain(u, knots);
  const int p = knots.degree;
  BasisDerivatives out;
  const BasisValues full = basis_functions(u, knots);
  out.start = full.start;
  out.count = full.count;
  out.values = full.values;
  if (p == 0) return out;
  // N'_{i,p} = p/(u_{i+p}-u_i) N_{i,p-1} - p/(u_{i+p+1}-u_{i+1}) N_{i+1,p-1}
  const int span = knots.find_span(u);
  // Degree p-1 functions nonzero on this span are N_{span-p+1 .. span, p-1}.
  std::array<double, kMaxDegree + 1> low{};
  {
    const auto& U = knots.values;
    std::array<double, kMaxDegree + 1> left{}, right{};
    low[0] = 1.0;
    for (int j = 1; j <= p - 1; ++j) {
      left[static_cast<std::size_t>(j)] = u - U[static_cast<std::size_t>(span + 1 - j)];
      right[static_cast<std::size_t>(j)] = U[static_cast<std::size_t>(span + j)] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
        const double temp = denom == 0.0 ? 0.0 : low[static_cast<std::size_t>(r)] / denom;
        low[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
        saved = left[static_cast<std::size_t>(j - r)] * temp;
      }
      low[static_cast<std::size_t>(j)] = saved;
    }
  }
  const auto& U = knots.values;
  auto lowerN = [&](int i) -> double {  // N_{i,p-1}(u), global index
    const int k = i - (span - p + 1);
    return (k < 0 || k > p - 1) ? 0.0 : low[static_cast<std::size_t>(k)];
  };
  for (int k = 0; k <= p; ++k) {
    const int i = out.start + k;
    double d = 0.0;
    const double a = U[static_cast<std::size_t>(i + p)] - U[static_cast<std::size_t>(i)];
    const double b = U[static_cast<std::size_t>(i + p + 1)] - U[static_cast<std::size_t>(i + 1)];
    if (a != 0.0) d += p / a * lowerN(i);
    if (b != 0.0) d -= p / b * lowerN(i + 1);
    out.first[static_cast<std::size_t>(k)] = d;
  }
  return out;
}

std::vector<double> uniform_params(int n) {
  require(n >= 2, "need at least two parameters");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n - 1);
  out.back() = 1.0;
  return out;
}

ControlPolygon make_polygon(Points control_points, int degree) {
  const int n = static_cast<int>(control_points.size());
  require(degree >= 1 && degree <= kMaxDegree, "unsupported curve degree");
  require(n >= degree + 1, "control polygon needs at least degree+1 points");
  ControlPolygon poly;
  poly.points = std::move(control_points);
  poly.degree = degree;
  poly.params = uniform_params(n);
  poly.knots = KnotVector::averaged(poly.params, degree);
  return poly;
}

Matrix basis_matrix(const KnotVector& knots, std::span<const double> params) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(params.size()), knots.control_count());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto b = basis_functions(params[k], knots);
    for (int j = 0; j < b.count; ++j) m(static_cast<Eigen::Index>(k), b.start + j) = b.values[static_cast<std::size_t>(j)];
  }
  return m;
}

Matrix derivative_matrix(const KnotVector& knots, std::span<const double> params) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(params.size()), knots.control_count());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto b = basis_derivatives(params[k], knots);
    for (int j = 0; j < b.count; ++j) m(static_cast<Eigen::Index>(k), b.start + j) = b.first[static_cast<std::size_t>(j)];
  }
  return m;
}

ControlPolygon fit_curve(PointSpan samples, int degree) {
  const int n = static_cast<int>(samples.size());
  require(degree >= 1 && degree <= kMaxDegree, "unsupported curve degree");
  require(n >= degree + 1, "fit_curve needs at least degree+1 samples, got " + std::to_string(n));
  for (const auto& s : samples) require(s.allFinite(), "fit_curve samples must be finite");

  ControlPolygon poly;
  poly.degree = degree;
  poly.params = uniform_params(n);
  poly.knots = KnotVector::averaged(poly.params, degree);

  const Matrix N = basis_matrix(poly.knots, poly.params);
  Eigen::FullPivLU<Matrix> lu(N);
  if (!lu.isInvertible()) throw FitError("singular collocation matrix in curve fit");
  Matrix rhs(n, 3);
  for (int k = 0; k < n; ++k) rhs.row(k) = samples[static_cast<std::size_t>(k)].transpose();
  const Matrix ctrl = lu.solve(rhs);
  if (!ctrl.allFinite()) throw FitError("curve fit produced non-finite control points");
  poly.points.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) poly.points[static_cast<std::size_t>(k)] = ctrl.row(k).transpose();
  // Clamped ends interpolate exactly; pin them to avoid solver round-off.
  poly.points.front() = samples.front();
  poly.points.back() = samples.back();
  return poly;
}

Vec3 eval_curve(const ControlPolygon& poly, double u) {
  if (!(u >= -kDomainSlack && u <= 1.0 + kDomainSlack)) throw DomainError("curve parameter outside [0,1]");
  const auto b = basis_functions(u, poly.knots);
  Vec3 p = Vec3::Zero();
  for (int j = 0; j < b.count; ++j) p += b.values[static_cast<std::size_t>(j)] * poly.points[static_cast<std::size_t>(b.start + j)];
  return p;
}

Vec3 eval_curve_derivative(const ControlPolygon& poly, double u) {
  if (!(u >= -kDomainSlack && u <= 1.0 + kDomainSlack)) throw DomainError("curve parameter outside [0,1]");
  const auto b = basis_derivatives(u, poly.knots);
  Vec3 d = Vec3::Zero();
  for (int j = 0; j < b.count; ++j) d += b.first[static_cast<std::size_t>(j)] * poly.points[static_cast<std::size_t>(b.start + j)];
  return d;
}

Points tangents(const ControlPolygon& poly, std::span<const double> params) {
  Points out;
  out.reserve(params.size());
  for (double u : params) {
    const Vec3 d = eval_curve_derivative(poly, u);
    const double len = d.norm();
    if (!(len > 1e-14)) throw DegenerateError("zero-length curve derivative at u=" + std::to_string(u));
    out.push_back(d / len);
  }
  return out;
}

double polyline_length(PointSpan polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += (polyline[i] - polyline[i - 1]).norm();
  return len;
}

Points resample_arc_length(PointSpan polyline, int count) {
  require(polyline.size() >= 2, "polyline needs at least two points");
  require(count >= 2, "resample count must be at least 2");
  std::vector<double> cum(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) cum[i] = cum[i - 1] + (polyline[i] - polyline[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) throw DegenerateError("polyline has zero length");
  Points out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t seg = 1;
  for (int k = 0; k < count; ++k) {
    const double s = total * k / (count - 1);
    while (seg < polyline.size() - 1 && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? std::clamp((s - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(polyline[seg - 1] + t * (polyline[seg] - polyline[seg - 1]));
  }
  out.front() = polyline.front();
  out.back() = polyline.back();
  return out;
}

}  // namespace vg::geometry
