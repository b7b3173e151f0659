#pragma once

#include <cstdint>

#include "vesselgen/core/json.hpp"
#include "vesselgen/core/types.hpp"

namespace vg::baselines {

/// Multivariate normal with a lower-triangular factor: factor * factor^T = covariance + jitter * I.
struct GaussianModel {
  Vector mean;
  Matrix covariance;
  Matrix factor;
  double jitter = 0.0;

  Eigen::Index dim() const { return mean.size(); }
};

/// Mean and 1/(K-1) covariance of the rows. The Cholesky factor gets diagonal jitter
/// 1e-10 * trace / D, grown tenfold until the factorization reproduces the matrix.
GaussianModel fit_gaussian(const Matrix& samples);

/// `count` draws as rows; draw k uses stream (seed, k).
Matrix sample_gaussian(const GaussianModel& g, int count, std::uint64_t seed);

/// Linear shape model over equal-length vectors.
struct PcaModel {
  Vector mean;
  Matrix basis;        // D x modes, orthonormal columns
  Vector eigenvalues;  // explained variance per mode, non-increasing
  GaussianModel coefficients;

  int modes() const { return static_cast<int>(basis.cols()); }
  Vector project(const Vector& x) const { return basis.transpose() * (x - mean); }
  Vector reconstruct(const Vector& a) const { return mean + basis * a; }
};

inline constexpr int kDefaultModes = 21;

/// Modes from the SVD of the centered rows; modes <= 0 selects min(K, 21). Mode signs
/// are fixed so that each column's largest-magnitude entry is positive.
PcaModel pca_fit(const Matrix& samples, int modes = 0);

/// v = mean + U a with a ~ N(mu*, Sigma*); rows.
Matrix sample_pca_gaussian(const PcaModel& pca, int count, std::uint64_t seed);

/// Centerline and radii drawn from two independent PCA models.
struct DecoupledSamples {
  Matrix centerlines;  // count x D_C
  Matrix radii;        // count x D_R
  Matrix cl_coefficients;
  Matrix rad_coefficients;
};

DecoupledSamples sample_pca_decoupled(const PcaModel& cl, const PcaModel& rad, int count, std::uint64_t seed);

/// Norm of the part of x - mean outside span(U).
double subspace_distance(const Vector& x, const PcaModel& pca);

Json gaussian_to_json(const GaussianModel& g);
GaussianModel gaussian_from_json(const Json& j);
Json pca_to_json(const PcaModel& p);
PcaModel pca_from_json(const Json& j);

}  // namespace vg::baselines
