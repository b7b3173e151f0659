#pragma once

#include <span>
#include <vector>

#include "vesselgen/core/types.hpp"

namespace vg::kernels {

/// Sparse linear map from a control net to sampled surface points. Every sample is a
/// fixed-width weighted sum of control points; the transpose (control -> samples) is
/// stored as CSR so the adjoint can be gathered without write conflicts.
struct SurfaceStencil {
  int samples = 0;
  int controls = 0;
  int width = 0;
  std::vector<int> index;      // samples * width
  std::vector<double> weight;  // samples * width

  std::vector<int> t_offsets;  // controls + 1
  std::vector<int> t_sample;
  std::vector<double> t_weight;

  /// Builds the transpose from index/weight.
  void finalize();
};

Points apply_stencil_serial(const SurfaceStencil& st, PointSpan controls);
Points apply_stencil_parallel(const SurfaceStencil& st, PointSpan controls);

/// out[c] = sum over samples s of weight(s,c) * cotangent[s]
Points apply_adjoint_serial(const SurfaceStencil& st, PointSpan cotangent);
Points apply_adjoint_parallel(const SurfaceStencil& st, PointSpan cotangent);

inline Points apply_stencil(const SurfaceStencil& st, PointSpan controls) { return apply_stencil_parallel(st, controls); }
inline Points apply_adjoint(const SurfaceStencil& st, PointSpan cotangent) { return apply_adjoint_parallel(st, cotangent); }

}  // namespace vg::kernels
