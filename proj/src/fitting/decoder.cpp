#include "vesselgen/fitting/decoder.hpp"

#include <cmath>

#include "vesselgen/core/error.hpp"

namespace vg::fitting {

using geometry::KnotVector;

NurbsDecoder::NurbsDecoder(int n, int m, int res_u, int res_v, int degree)
    : n_(n), m_(m), res_u_(res_u), res_v_(res_v), degree_(degree) {
  require(n >= degree + 1, "decoder needs n >= degree + 1");
  require(m >= 3, "decoder needs m >= 3");
  const auto params = geometry::uniform_params(n);
  knots_ = KnotVector::averaged(params, degree);
  basis_ = geometry::basis_matrix(knots_, params);
  derivative_ = geometry::derivative_matrix(knots_, params);
  const auto us = geometry::mesh_u_params(res_u);
  const auto vs = geometry::mesh_v_params(res_v);
  stencil_ = geometry::surface_stencil(knots_, n, m, 3, us, vs);
}

NurbsDecoder::State NurbsDecoder::prepare(PointSpan control) const {
  require(control.size() == static_cast<std::size_t>(n_), "control point count does not match the decoder");
  State s;
  s.control.assign(control.begin(), control.end());
  Points centers(control.size(), Vec3::Zero()), derivs(control.size(), Vec3::Zero());
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      const double b = basis_(i, k), d = derivative_(i, k);
      if (b != 0.0) centers[i] += b * control[k];
      if (d != 0.0) derivs[i] += d * control[k];
    }
  s.skeleton = geometry::build_skeleton(centers, derivs, control.back() - control.front(), m_, &s.trace);
  return s;
}

Points NurbsDecoder::samples_for(const State& state, const Matrix& radii) const {
  return samples_for(state, radii, stencil_);
}

Points NurbsDecoder::samples_for(const State& state, const Matrix& radii, const kernels::SurfaceStencil& st) const {
  require(st.controls == n_ * m_, "stencil does not match the control net");
  require(radii.rows() == n_ && radii.cols() == m_, "radial profile shape does not match the decoder");
  Points net(static_cast<std::size_t>(n_ * m_));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < m_; ++j) {
      const double r = radii(i, j);
      if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("radii must be positive and finite");
      net[static_cast<std::size_t>(i * m_ + j)] = state.skeleton.centers[i] + r * state.skeleton.direction(i, j);
    }
  return kernels::apply_stencil(st, net);
}

NurbsDecoder::State NurbsDecoder::forward(PointSpan control, const Matrix& radii) const {
  State s = prepare(control);
  require(radii.rows() == n_ && radii.cols() == m_, "radial profile shape does not match the decoder");
  s.radii = radii;
  s.net.resize(static_cast<std::size_t>(n_ * m_));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < m_; ++j) {
      const double r = radii(i, j);
      if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("radii must be positive and finite");
      s.net[static_cast<std::size_t>(i * m_ + j)] = s.skeleton.centers[i] + r * s.skeleton.direction(i, j);
    }
  s.samples = kernels::apply_stencil(stencil_, s.net);
  return s;
}

Matrix NurbsDecoder::pullback_radii(const State& state, PointSpan cotangent) const {
  return pullback_radii(state, cotangent, stencil_);
}

Matrix NurbsDecoder::pullback_radii(const State& state, PointSpan cotangent, const kernels::SurfaceStencil& st) const {
  require(st.controls == n_ * m_, "stencil does not match the control net");
  require(cotangent.size() == static_cast<std::size_t>(st.samples), "cotangent size does not match samples");
  const Points g = kernels::apply_adjoint(st, cotangent);
  Matrix out(n_, m_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < m_; ++j) out(i, j) = g[static_cast<std::size_t>(i * m_ + j)].dot(state.skeleton.direction(i, j));
  return out;
}

NurbsDecoder::Gradient NurbsDecoder::pullback(const State& state, PointSpan cotangent) const {
  require(cotangent.size() == static_cast<std::size_t>(stencil_.samples), "cotangent size does not match samples");
  require(state.radii.rows() == n_ && state.radii.cols() == m_, "pullback needs a forward() state");
  const auto& sk = state.skeleton;
  const auto& tr = state.trace;
  const double step = 2.0 * kPi / m_;
  const Points g_net = kernels::apply_adjoint(stencil_, cotangent);

  Gradient out;
  out.radii.resize(n_, m_);
  Points q_bar(n_, Vec3::Zero()), t_bar(n_, Vec3::Zero()), w_bar(n_, Vec3::Zero());

  // s_ij = q_i + r_ij * rotate(w_i, t_i, j*step)
  for (int i = 0; i < n_; ++i) {
    const Vec3& t = sk.tangents[i];
    const Vec3& w = sk.frame_w[i];
    for (int j = 0; j < m_; ++j) {
      const Vec3& g = g_net[static_cast<std::size_t>(i * m_ + j)];
      out.radii(i, j) = g.dot(sk.direction(i, j));
      q_bar[i] += g;
      const Vec3 o = state.radii(i, j) * g;
      const double c = std::cos(j * step), s = std::sin(j * step), k = 1.0 - c;
      w_bar[i] += c * o + s * o.cross(t) + k * o.dot(t) * t;
      t_bar[i] += s * w.cross(o) + k * (t.dot(w) * o + o.dot(t) * w);
    }
  }

  // w_i = cos(phi) a_i - sin(phi) b_i for i >= 1 (contour point along the chosen index);
  // w_0 is the initial direction itself.
  const auto& cs = tr.contours;
  Vec3 w0_bar = w_bar[0];
  const Vec3& w0 = sk.frame_w[0];
  for (int i = 0; i < n_; ++i) {
    Vec3 a_bar = Vec3::Zero(), b_bar = Vec3::Zero();
    if (i > 0) {
      const double phi = tr.alignment.indices[i] * step;
      a_bar += std::cos(phi) * w_bar[i];
      b_bar -= std::sin(phi) * w_bar[i];
    }
    const Vec3& t = sk.tangents[i];
    const Vec3& a = cs.first_axis[i];
    // b = t x a
    t_bar[i] += a.cross(b_bar);
    a_bar += b_bar.cross(t);
    // a = p / |p|
    const Vec3& p = cs.reference_projection[i];
    const double plen = p.norm();
    const Vec3 p_bar = (a_bar - a_bar.dot(a) * a) / plen;
    // p = ref - (ref.t) t, ref = w0 or a fixed axis
    Vec3 ref = w0;
    if (cs.used_fallback[i]) {
      int axis = 0;
      for (int k = 1; k < 3; ++k)
        if (std::abs(t(k)) < std::abs(t(axis))) axis = k;
      ref = Vec3::Unit(axis);
    } else {
      w0_bar += p_bar - p_bar.dot(t) * t;
    }
    t_bar[i] -= ref.dot(t) * p_bar + p_bar.dot(t) * ref;
  }

  // w0 = x/|x|, x = t0 x chord (or t0 x e)
  Vec3 chord_bar = Vec3::Zero();
  {
    const Vec3& x = tr.w0_cross;
    const Vec3 x_bar = (w0_bar - w0_bar.dot(w0) * w0) / x.norm();
    const Vec3& t0 = sk.tangents[0];
    if (tr.w0_fallback) {
      t_bar[0] += Vec3::Unit(tr.w0_fallback_axis).cross(x_bar);
    } else {
      const Vec3 chord = state.control.back() - state.control.front();
      t_bar[0] += chord.cross(x_bar);
      chord_bar = x_bar.cross(t0);
    }
  }

  // t_i = d_i / |d_i|
  Points d_bar(n_);
  for (int i = 0; i < n_; ++i) {
    const Vec3& t = sk.tangents[i];
    d_bar[i] = (t_bar[i] - t_bar[i].dot(t) * t) / tr.derivatives[i].norm();
  }

  out.control.assign(n_, Vec3::Zero());
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) out.control[k] += basis_(i, k) * q_bar[i] + derivative_(i, k) * d_bar[i];
  out.control.back() += chord_bar;
  out.control.front() -= chord_bar;
  return out;
}

geometry::QuadMesh NurbsDecoder::mesh(const State& state) const {
  geometry::QuadMesh mesh;
  mesh.res_u = res_u_;
  mesh.res_v = res_v_;
  mesh.vertices = state.samples;
  mesh.quads = geometry::lattice_quads(res_u_, res_v_);
  return mesh;
}

}  // namespace vg::fitting
