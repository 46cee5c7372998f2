// Parallel vs serial-reference kernels on the layer shapes the 64x64
// generator and discriminator actually run.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cagan/kernels.hpp"

namespace {

using cagan::kernels::ConvGeometry;
using cagan::kernels::DeconvGeometry;
using cagan::kernels::Trans;

std::vector<float> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

void BM_GemmParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vector(static_cast<std::size_t>(n) * n, 1);
  const auto b = random_vector(static_cast<std::size_t>(n) * n, 2);
  std::vector<float> c(static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    cagan::kernels::gemm(Trans::kNo, Trans::kNo, n, n, n, 1.0f, a.data(), n, b.data(), n, 0.0f, c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}
BENCHMARK(BM_GemmParallel)->Arg(128)->Arg(256)->Arg(512);

void BM_GemmReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vector(static_cast<std::size_t>(n) * n, 1);
  const auto b = random_vector(static_cast<std::size_t>(n) * n, 2);
  std::vector<float> c(static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    cagan::kernels::reference::gemm(Trans::kNo, Trans::kNo, n, n, n, 1.0f, a.data(), n, b.data(), n, 0.0f,
                                    c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}
BENCHMARK(BM_GemmReference)->Arg(128)->Arg(256);

// Second encoder level of a base-64 generator at 64x64: 64 -> 128 channels, 32x32 -> 16x16.
ConvGeometry encoder_geometry() { return {64, 32, 32, 128, 4, 2, 1}; }
// Matching decoder level: 384 -> 64 channels, 16x16 -> 32x32.
DeconvGeometry decoder_geometry() { return {384, 16, 16, 64, 4, 2, 1}; }

template <bool kParallel>
void BM_ConvForward(benchmark::State& state) {
  const auto g = encoder_geometry();
  const auto x = random_vector(static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width, 3);
  const auto w = random_vector(static_cast<std::size_t>(g.out_channels) * g.patch(), 4);
  const auto b = random_vector(g.out_channels, 5);
  std::vector<float> y(static_cast<std::size_t>(g.out_channels) * g.out_height() * g.out_width());
  for (auto _ : state) {
    if constexpr (kParallel) cagan::kernels::conv2d_forward(g, x, w, b, y);
    else cagan::kernels::reference::conv2d_forward(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ConvForward<true>)->Name("BM_ConvForward/parallel");
BENCHMARK(BM_ConvForward<false>)->Name("BM_ConvForward/reference");

template <bool kParallel>
void BM_DeconvForward(benchmark::State& state) {
  const auto g = decoder_geometry();
  const auto x = random_vector(static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width, 6);
  const auto w = random_vector(static_cast<std::size_t>(g.in_channels) * g.out_channels * 16, 7);
  const auto b = random_vector(g.out_channels, 8);
  std::vector<float> y(static_cast<std::size_t>(g.out_channels) * g.out_height() * g.out_width());
  for (auto _ : state) {
    if constexpr (kParallel) cagan::kernels::deconv2d_forward(g, x, w, b, y);
    else cagan::kernels::reference::deconv2d_forward(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_DeconvForward<true>)->Name("BM_DeconvForward/parallel");
BENCHMARK(BM_DeconvForward<false>)->Name("BM_DeconvForward/reference");

template <bool kParallel>
void BM_ConvBackward(benchmark::State& state) {
  const auto g = encoder_geometry();
  const auto x = random_vector(static_cast<std::size_t>(g.in_channels) * g.in_height * g.in_width, 9);
  const auto w = random_vector(static_cast<std::size_t>(g.out_channels) * g.patch(), 10);
  const auto dy = random_vector(static_cast<std::size_t>(g.out_channels) * g.out_height() * g.out_width(), 11);
  std::vector<float> dx(x.size()), dw(w.size()), db(g.out_channels);
  for (auto _ : state) {
    if constexpr (kParallel) cagan::kernels::conv2d_backward(g, x, w, dy, dx, dw, db);
    else cagan::kernels::reference::conv2d_backward(g, x, w, dy, dx, dw, db);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_ConvBackward<true>)->Name("BM_ConvBackward/parallel");
BENCHMARK(BM_ConvBackward<false>)->Name("BM_ConvBackward/reference");

}  // namespace

BENCHMARK_MAIN();
