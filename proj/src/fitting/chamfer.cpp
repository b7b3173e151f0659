#include "vesselgen/fitting/chamfer.hpp"

#include "vesselgen/core/error.hpp"

namespace vg::fitting {

ChamferTarget::ChamferTarget(Points points) : points_(std::move(points)) {
  require(!points_.empty(), "Chamfer target must not be empty");
  if (points_.size() >= kernels::kGridMinRefs) grid_ = std::make_shared<const kernels::GridIndex>(points_);
}

kernels::NearestResult ChamferTarget::nearest_to(PointSpan queries) const {
  if (grid_ && kernels::prefer_grid(queries.size(), points_.size())) return kernels::nearest_grid(queries, *grid_);
  if (grid_) {
    kernels::NearestResult r;
    for (const auto& q : queries) {
      const auto [j, d] = grid_->query(q);
      r.index.push_back(j);
      r.sq_dist.push_back(d);
    }
    return r;
  }
  return kernels::nearest(queries, points_);
}

namespace {

ChamferReport combine(const kernels::NearestResult& fwd, const kernels::NearestResult& bwd) {
  ChamferReport r;
  double f = 0.0, b = 0.0;
  for (double d : fwd.sq_dist) f += d;
  for (double d : bwd.sq_dist) b += d;
  r.forward_term = f / static_cast<double>(fwd.sq_dist.size());
  r.backward_term = b / static_cast<double>(bwd.sq_dist.size());
  r.value = r.forward_term + r.backward_term;
  r.forward_index = fwd.index;
  r.backward_index = bwd.index;
  return r;
}

}  // namespace

ChamferReport chamfer(PointSpan X, PointSpan G) {
  require(!X.empty() && !G.empty(), "Chamfer distance needs two non-empty point sets");
  return combine(kernels::nearest(X, G), kernels::nearest(G, X));
}

ChamferReport chamfer(PointSpan X, const ChamferTarget& G) {
  require(!X.empty(), "Chamfer distance needs two non-empty point sets");
  return combine(G.nearest_to(X), kernels::nearest(G.points(), X));
}

Points chamfer_gradient(const ChamferReport& report, PointSpan X, PointSpan G) {
  require(report.forward_index.size() == X.size() && report.backward_index.size() == G.size(),
          "Chamfer report does not match the point sets");
  Points grad(X.size(), Vec3::Zero());
  const double fx = 2.0 / static_cast<double>(X.size());
  const double fg = 2.0 / static_cast<double>(G.size());
  for (std::size_t i = 0; i < X.size(); ++i)
    grad[i] += fx * (X[i] - G[static_cast<std::size_t>(report.forward_index[i])]);
  for (std::size_t k = 0; k < G.size(); ++k) {
    const auto i = static_cast<std::size_t>(report.backward_index[k]);
    grad[i] += fg * (X[i] - G[k]);
  }
  return grad;
}

double one_sided_chamfer(PointSpan G, PointSpan X, Points* grad_x) {
  require(!X.empty() && !G.empty(), "Chamfer distance needs two non-empty point sets");
  const auto nn = kernels::nearest(G, X);
  double sum = 0.0;
  for (double d : nn.sq_dist) sum += d;
  const double inv = 1.0 / static_cast<double>(G.size());
  if (grad_x) {
    grad_x->assign(X.size(), Vec3::Zero());
    for (std::size_t k = 0; k < G.size(); ++k) {
      const auto i = static_cast<std::size_t>(nn.index[k]);
      (*grad_x)[i] += 2.0 * inv * (X[i] - G[k]);
    }
  }
  return sum * inv;
}

}  // namespace vg::fitting
