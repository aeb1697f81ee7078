#include <benchmark/benchmark.h>

#include <random>

#include "ofgsc/kernels.hpp"

using namespace ofgsc;
using kernels::Exec;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  Image img(h, w);
  for (double& v : img.data) v = u(rng);
  return img;
}

FlowField random_flow(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-3.0F, 3.0F);
  FlowField f(h, w);
  for (auto& v : f.u) v = u(rng);
  for (auto& v : f.v) v = u(rng);
  return f;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::parallel : Exec::serial; }

void BM_GaussianBlur(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = random_image(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gaussian_blur(img, 1.5, exec_of(state)));
}

void BM_Warp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = random_image(n, n, 2);
  const FlowField flow = random_flow(n, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::warp_bilinear(img, flow, 1.0, exec_of(state)));
}

void BM_LkSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image gx = random_image(n, n, 4), gy = random_image(n, n, 5), it = random_image(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::lk_solve(gx, gy, it, 5, 1e-6, exec_of(state)));
}

void BM_LkIterate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image ref = random_image(n, n, 9), target = random_image(n, n, 10);
  const Image gx = random_image(n, n, 11), gy = random_image(n, n, 12);
  const FlowField init(n, n, 0.5F, -0.5F);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::lk_iterate(ref, gx, gy, target, init, 5, 3, 1e-6, exec_of(state)));
}

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image a = random_image(n, n, 7), b = random_image(n, n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::ssim_windowed(a, b, exec_of(state)));
}

// Second argument: 0 = serial reference, 1 = OpenMP.
#define KERNEL_ARGS ArgsProduct({{64, 224}, {0, 1}})->Unit(benchmark::kMicrosecond)

BENCHMARK(BM_GaussianBlur)->KERNEL_ARGS;
BENCHMARK(BM_Warp)->KERNEL_ARGS;
BENCHMARK(BM_LkSolve)->KERNEL_ARGS;
BENCHMARK(BM_LkIterate)->KERNEL_ARGS;
BENCHMARK(BM_Ssim)->KERNEL_ARGS;

}  // namespace

BENCHMARK_MAIN();
