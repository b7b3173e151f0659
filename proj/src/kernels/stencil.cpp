#include "vesselgen/kernels/stencil.hpp"

#include "vesselgen/core/error.hpp"

namespace vg::kernels {

void SurfaceStencil::finalize() {
  require(index.size() == static_cast<std::size_t>(samples) * static_cast<std::size_t>(width), "stencil size mismatch");
  t_offsets.assign(static_cast<std::size_t>(controls) + 1, 0);
  for (int c : index) ++t_offsets[static_cast<std::size_t>(c) + 1];
  for (int c = 0; c < controls; ++c) t_offsets[static_cast<std::size_t>(c) + 1] += t_offsets[static_cast<std::size_t>(c)];
  t_sample.assign(index.size(), 0);
  t_weight.assign(index.size(), 0.0);
  std::vector<int> fill(t_offsets.begin(), t_offsets.end() - 1);
  for (int s = 0; s < samples; ++s)
    for (int k = 0; k < width; ++k) {
      const std::size_t e = static_cast<std::size_t>(s) * static_cast<std::size_t>(width) + static_cast<std::size_t>(k);
      const int slot = fill[static_cast<std::size_t>(index[e])]++;
      t_sample[static_cast<std::size_t>(slot)] = s;
      t_weight[static_cast<std::size_t>(slot)] = weight[e];
    }
}

Points apply_stencil_serial(const SurfaceStencil& st, PointSpan controls) {
  require(controls.size() == static_cast<std::size_t>(st.controls), "control count does not match stencil");
  Points out(static_cast<std::size_t>(st.samples), Vec3::Zero());
  for (int s = 0; s < st.samples; ++s) {
    Vec3 acc = Vec3::Zero();
    const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(st.width);
    for (int k = 0; k < st.width; ++k)
      acc += st.weight[base + static_cast<std::size_t>(k)] * controls[static_cast<std::size_t>(st.index[base + static_cast<std::size_t>(k)])];
    out[static_cast<std::size_t>(s)] = acc;
  }
  return out;
}

Points apply_stencil_parallel(const SurfaceStencil& st, PointSpan controls) {
  require(controls.size() == static_cast<std::size_t>(st.controls), "control count does not match stencil");
  Points out(static_cast<std::size_t>(st.samples), Vec3::Zero());
#pragma omp parallel for schedule(static)
  for (int s = 0; s < st.samples; ++s) {
    Vec3 acc = Vec3::Zero();
    const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(st.width);
    for (int k = 0; k < st.width; ++k)
      acc += st.weight[base + static_cast<std::size_t>(k)] * controls[static_cast<std::size_t>(st.index[base + static_cast<std::size_t>(k)])];
    out[static_cast<std::size_t>(s)] = acc;
  }
  return out;
}

Points apply_adjoint_serial(const SurfaceStencil& st, PointSpan cotangent) {
  require(cotangent.size() == static_cast<std::size_t>(st.samples), "cotangent count does not match stencil");
  Points out(static_cast<std::size_t>(st.controls), Vec3::Zero());
  for (int s = 0; s < st.samples; ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(st.width);
    for (int k = 0; k < st.width; ++k)
      out[static_cast<std::size_t>(st.index[base + static_cast<std::size_t>(k)])] +=
          st.weight[base + static_cast<std::size_t>(k)] * cotangent[static_cast<std::size_t>(s)];
  }
  return out;
}

Points apply_adjoint_parallel(const SurfaceStencil& st, PointSpan cotangent) {
  require(cotangent.size() == static_cast<std::size_t>(st.samples), "cotangent count does not match stencil");
  require(st.t_offsets.size() == static_cast<std::size_t>(st.controls) + 1, "stencil transpose not finalized");
  Points out(static_cast<std::size_t>(st.controls), Vec3::Zero());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < st.controls; ++c) {
    Vec3 acc = Vec3::Zero();
    for (int e = st.t_offsets[static_cast<std::size_t>(c)]; e < st.t_offsets[static_cast<std::size_t>(c) + 1]; ++e)
      acc += st.t_weight[static_cast<std::size_t>(e)] * cotangent[static_cast<std::size_t>(st.t_sample[static_cast<std::size_t>(e)])];
    out[static_cast<std::size_t>(c)] = acc;
  }
  return out;
}

}  // namespace vg::kernels
