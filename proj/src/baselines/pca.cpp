#include "vesselgen/baselines/pca.hpp"

#include <algorithm>
#include <cmath>

#include "vesselgen/core/error.hpp"
#include "vesselgen/core/random.hpp"

namespace vg::baselines {
namespace {

bool factor_reproduces(const Matrix& L, const Matrix& target) {
  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  return L.allFinite() && ((L * L.transpose()) - target).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

}  // namespace

GaussianModel fit_gaussian(const Matrix& samples) {
  const auto K = samples.rows();
  require(K >= 2, "a Gaussian fit needs at least two samples");
  require(samples.allFinite(), "samples must be finite");
  GaussianModel g;
  g.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - g.mean.transpose();
  g.covariance = centered.transpose() * centered / static_cast<double>(K - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());

  const auto D = g.dim();
  Eigen::LLT<Matrix> llt(g.covariance);
  if (llt.info() == Eigen::Success && factor_reproduces(llt.matrixL(), g.covariance)) {
    g.factor = llt.matrixL();
    return g;
  }
  const double trace = g.covariance.trace();
  double jitter = 1e-10 * (trace > 0 ? trace / static_cast<double>(D) : 1.0);
  for (int attempt = 0; attempt < 30; ++attempt, jitter *= 10) {
    const Matrix shifted = g.covariance + jitter * Matrix::Identity(D, D);
    llt.compute(shifted);
    if (llt.info() == Eigen::Success && factor_reproduces(llt.matrixL(), shifted)) {
      g.factor = llt.matrixL();
      g.jitter = jitter;
      return g;
    }
  }
  throw NumericalError("covariance could not be factorized");
}

Matrix sample_gaussian(const GaussianModel& g, int count, std::uint64_t seed) {
  require(count >= 0, "sample count must be non-negative");
  Matrix out(count, g.dim());
  for (int k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(k));
    Vector z(g.dim());
    fill_normal(rng, z);
    out.row(k) = (g.mean + g.factor * z).transpose();
  }
  return out;
}

PcaModel pca_fit(const Matrix& samples, int modes) {
  const auto K = samples.rows();
  const auto D = samples.cols();
  require(K >= 2, "PCA needs at least two samples");
  if (modes <= 0) modes = static_cast<int>(std::min<Eigen::Index>(K, kDefaultModes));
  modes = static_cast<int>(std::min<Eigen::Index>({static_cast<Eigen::Index>(modes), K, D}));

  PcaModel p;
  p.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - p.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  p.basis = svd.matrixV().leftCols(modes);
  for (int c = 0; c < modes; ++c) {
    Eigen::Index arg = 0;
    p.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (p.basis(arg, c) < 0) p.basis.col(c) *= -1.0;
  }
  p.eigenvalues = svd.singularValues().head(modes).array().square() / static_cast<double>(K - 1);
  p.coefficients = fit_gaussian(centered * p.basis);
  return p;
}

Matrix sample_pca_gaussian(const PcaModel& pca, int count, std::uint64_t seed) {
  const Matrix a = sample_gaussian(pca.coefficients, count, seed);
  return (a * pca.basis.transpose()).rowwise() + pca.mean.transpose();
}

DecoupledSamples sample_pca_decoupled(const PcaModel& cl, const PcaModel& rad, int count, std::uint64_t seed) {
  DecoupledSamples s;
  s.cl_coefficients = sample_gaussian(cl.coefficients, count, stream_seed(seed, 1));
  s.rad_coefficients = sample_gaussian(rad.coefficients, count, stream_seed(seed, 2));
  s.centerlines = (s.cl_coefficients * cl.basis.transpose()).rowwise() + cl.mean.transpose();
  s.radii = (s.rad_coefficients * rad.basis.transpose()).rowwise() + rad.mean.transpose();
  return s;
}

double subspace_distance(const Vector& x, const PcaModel& pca) {
  require(x.size() == pca.mean.size(), "sample dimension does not match the PCA model");
  const Vector d = x - pca.mean;
  return (d - pca.basis * (pca.basis.transpose() * d)).norm();
}

Json gaussian_to_json(const GaussianModel& g) {
  return Json{{"mean", to_json(g.mean)}, {"covariance", to_json(g.covariance)}, {"factor", to_json(g.factor)},
              {"jitter", g.jitter}};
}

GaussianModel gaussian_from_json(const Json& j) {
  GaussianModel g;
  g.mean = vector_from_json(j.at("mean"));
  g.covariance = matrix_from_json(j.at("covariance"));
  g.factor = matrix_from_json(j.at("factor"));
  g.jitter = j.value("jitter", 0.0);
  require(g.covariance.rows() == g.dim() && g.factor.rows() == g.dim(), "Gaussian model shapes disagree");
  return g;
}

Json pca_to_json(const PcaModel& p) {
  return Json{{"mean", to_json(p.mean)}, {"modes", to_json(p.basis)}, {"eigenvalues", to_json(p.eigenvalues)},
              {"gaussian", gaussian_to_json(p.coefficients)}};
}

PcaModel pca_from_json(const Json& j) {
  PcaModel p;
  p.mean = vector_from_json(j.at("mean"));
  p.basis = matrix_from_json(j.at("modes"));
  p.eigenvalues = vector_from_json(j.at("eigenvalues"));
  p.coefficients = gaussian_from_json(j.at("gaussian"));
  require(p.basis.rows() == p.mean.size() && p.basis.cols() == p.eigenvalues.size(), "PCA model shapes disagree");
  return p;
}

}  // namespace vg::baselines
