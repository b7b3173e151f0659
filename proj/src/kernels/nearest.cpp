#include "vesselgen/kernels/nearest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vesselgen/core/error.hpp"

namespace vg::kernels {

namespace {

inline void brute_one(const Vec3& q, PointSpan refs, int& best, double& best_sq) {
  best = -1;
  best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const double d = (refs[j] - q).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      best = static_cast<int>(j);
    }
  }
}

}  // namespace

NearestResult nearest_serial(PointSpan queries, PointSpan refs) {
  require(!refs.empty(), "nearest neighbour search needs a non-empty reference set");
  NearestResult r;
  r.index.resize(queries.size());
  r.sq_dist.resize(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) brute_one(queries[i], refs, r.index[i], r.sq_dist[i]);
  return r;
}

NearestResult nearest_parallel(PointSpan queries, PointSpan refs) {
  require(!refs.empty(), "nearest neighbour search needs a non-empty reference set");
  NearestResult r;
  r.index.resize(queries.size());
  r.sq_dist.resize(queries.size());
  const long count = static_cast<long>(queries.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) brute_one(queries[i], refs, r.index[i], r.sq_dist[i]);
  return r;
}

GridIndex::GridIndex(PointSpan refs) : refs_(refs.begin(), refs.end()) {
  require(!refs_.empty(), "grid index needs points");
  Vec3 lo = refs_[0], hi = refs_[0];
  for (const auto& p : refs_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 ext = hi - lo;
  const double n = static_cast<double>(refs_.size());
  const double longest = std::max(ext.maxCoeff(), 1e-12);
  // Roughly two points per cell, measured over the non-degenerate axes.
  int live = 0;
  double measure = 1.0;
  for (int k = 0; k < 3; ++k)
    if (ext(k) > 1e-9 * longest) {
      ++live;
      measure *= ext(k);
    }
  cell_ = live == 0 ? 1.0 : std::pow(2.0 * measure / n, 1.0 / live);
  cell_ = std::max(cell_, longest / 1024.0);
  origin_ = lo;
  for (int k = 0; k < 3; ++k) dims_[k] = std::max<long>(1, static_cast<long>(std::floor(ext(k) / cell_)) + 1);

  const long total = dims_[0] * dims_[1] * dims_[2];
  offsets_.assign(static_cast<std::size_t>(total) + 1, 0);
  std::vector<long> cell_ids(refs_.size());
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    const long id = (cell_of(2, refs_[i].z()) * dims_[1] + cell_of(1, refs_[i].y())) * dims_[0] + cell_of(0, refs_[i].x());
    cell_ids[i] = id;
    ++offsets_[static_cast<std::size_t>(id) + 1];
  }
  for (long c = 0; c < total; ++c) offsets_[static_cast<std::size_t>(c) + 1] += offsets_[static_cast<std::size_t>(c)];
  items_.assign(refs_.size(), 0);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < refs_.size(); ++i) items_[static_cast<std::size_t>(fill[static_cast<std::size_t>(cell_ids[i])]++)] = static_cast<int>(i);
}

long GridIndex::cell_of(int axis, double x) const {
  const long c = static_cast<long>(std::floor((x - origin_(axis)) / cell_));
  return std::clamp<long>(c, 0, dims_[axis] - 1);
}

void GridIndex::scan_cell(long ix, long iy, long iz, const Vec3& q, int& best, double& best_sq) const {
  const long id = (iz * dims_[1] + iy) * dims_[0] + ix;
  for (int e = offsets_[static_cast<std::size_t>(id)]; e < offsets_[static_cast<std::size_t>(id) + 1]; ++e) {
    const int j = items_[static_cast<std::size_t>(e)];
    const double d = (refs_[static_cast<std::size_t>(j)] - q).squaredNorm();
    if (d < best_sq || (d == best_sq && j < best)) {
      best_sq = d;
      best = j;
    }
  }
}

std::pair<int, double> GridIndex::query(const Vec3& q) const {
  const long cx = cell_of(0, q.x()), cy = cell_of(1, q.y()), cz = cell_of(2, q.z());
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  const long max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (long ring = 0; ring <= max_ring; ++ring) {
    for (long iz = cz - ring; iz <= cz + ring; ++iz) {
      if (iz < 0 || iz >= dims_[2]) continue;
      for (long iy = cy - ring; iy <= cy + ring; ++iy) {
        if (iy < 0 || iy >= dims_[1]) continue;
        const bool face = std::abs(iz - cz) == ring || std::abs(iy - cy) == ring;
        if (face) {
          for (long ix = std::max<long>(0, cx - ring); ix <= std::min(dims_[0] - 1, cx + ring); ++ix)
            scan_cell(ix, iy, iz, q, best, best_sq);
        } else {
          if (cx - ring >= 0) scan_cell(cx - ring, iy, iz, q, best, best_sq);
          if (ring > 0 && cx + ring < dims_[0]) scan_cell(cx + ring, iy, iz, q, best, best_sq);
        }
      }
    }
    // Every cell of ring r+1 is at least r cell widths away from the query.
    const double bound = static_cast<double>(ring) * cell_;
    if (best >= 0 && best_sq < bound * bound) break;
  }
  return {best, best_sq};
}

NearestResult nearest_grid(PointSpan queries, PointSpan refs) { return nearest_grid(queries, GridIndex(refs)); }

NearestResult nearest_grid(PointSpan queries, const GridIndex& grid) {
  NearestResult r;
  r.index.resize(queries.size());
  r.sq_dist.resize(queries.size());
  const long count = static_cast<long>(queries.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < count; ++i) {
    const auto [j, d] = grid.query(queries[i]);
    r.index[i] = j;
    r.sq_dist[i] = d;
  }
  return r;
}

NearestResult nearest(PointSpan queries, PointSpan refs) {
  if (!prefer_grid(queries.size(), refs.size())) return nearest_parallel(queries, refs);
  return nearest_grid(queries, refs);
}

}  // namespace vg::kernels
