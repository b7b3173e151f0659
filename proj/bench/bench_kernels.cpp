// Serial reference vs OpenMP kernels on mesh-sized inputs.
#include <benchmark/benchmark.h>

#include <random>

#include "vesselgen/geometry/surface.hpp"
#include "vesselgen/kernels/nearest.hpp"
#include "vesselgen/kernels/stencil.hpp"

namespace {

vg::Points cloud(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  vg::Points out;
  for (int i = 0; i < count; ++i) out.emplace_back(d(rng), d(rng), d(rng));
  return out;
}

void BM_NearestSerial(benchmark::State& s) {
  const auto refs = cloud(static_cast<int>(s.range(0)), 1);
  const auto qs = cloud(static_cast<int>(s.range(0)), 2);
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::nearest_serial(qs, refs));
}

void BM_NearestParallel(benchmark::State& s) {
  const auto refs = cloud(static_cast<int>(s.range(0)), 1);
  const auto qs = cloud(static_cast<int>(s.range(0)), 2);
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::nearest_parallel(qs, refs));
}

void BM_NearestGrid(benchmark::State& s) {
  const auto refs = cloud(static_cast<int>(s.range(0)), 1);
  const auto qs = cloud(static_cast<int>(s.range(0)), 2);
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::nearest_grid(qs, refs));
}

struct StencilCase {
  vg::kernels::SurfaceStencil st;
  vg::Points controls;
  vg::Points cotangent;
};

StencilCase stencil_case() {
  const int n = 16, m = 21;
  vg::Points samples;
  for (int k = 0; k < n; ++k) samples.emplace_back(k, 0.1 * k * k, 0.0);
  const auto poly = vg::geometry::fit_curve(samples, 3);
  const auto us = vg::geometry::mesh_u_params(200);
  const auto vs = vg::geometry::mesh_v_params(80);
  StencilCase c;
  c.st = vg::geometry::surface_stencil(poly.knots, n, m, 3, us, vs);
  c.controls = cloud(n * m, 3);
  c.cotangent = cloud(c.st.samples, 4);
  return c;
}

void BM_StencilSerial(benchmark::State& s) {
  const auto c = stencil_case();
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::apply_stencil_serial(c.st, c.controls));
}

void BM_StencilParallel(benchmark::State& s) {
  const auto c = stencil_case();
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::apply_stencil_parallel(c.st, c.controls));
}

void BM_AdjointSerial(benchmark::State& s) {
  const auto c = stencil_case();
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::apply_adjoint_serial(c.st, c.cotangent));
}

void BM_AdjointParallel(benchmark::State& s) {
  const auto c = stencil_case();
  for (auto _ : s) benchmark::DoNotOptimize(vg::kernels::apply_adjoint_parallel(c.st, c.cotangent));
}

}  // namespace

BENCHMARK(BM_NearestSerial)->Arg(2000)->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestParallel)->Arg(2000)->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestGrid)->Arg(2000)->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StencilSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StencilParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AdjointSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AdjointParallel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
