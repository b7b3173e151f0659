#pragma once

#include <cstdint>
#include <random>

#include "vesselgen/core/types.hpp"

namespace vg {

using Rng = std::mt19937_64;

/// Derives an independent, reproducible stream from a base seed and a stream index
/// (splitmix64 finalizer). Batch element k always sees the same numbers regardless
/// of how many threads run the batch.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return Rng(stream_seed(seed, stream)); }

inline void fill_normal(Rng& rng, Eigen::Ref<Vector> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal(rng);
}

}  // namespace vg
