// Serial reference kernels against the OpenMP ones on layer-sized problems.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "semenet/tensor/kernels.hpp"

namespace k = semenet::kernels;

namespace {

std::vector<float> filled(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

k::ConvGeometry geometry(const benchmark::State& s) {
  k::ConvGeometry g;
  g.batch = 16;
  g.in_channels = g.out_channels = static_cast<std::size_t>(s.range(0));
  g.in_h = g.in_w = static_cast<std::size_t>(s.range(1));
  g.kernel_h = g.kernel_w = 3;
  g.pad_h = g.pad_w = 1;
  return g;
}

template <bool Reference>
void conv_forward(benchmark::State& s) {
  const k::ConvGeometry g = geometry(s);
  const auto x = filled(g.batch * g.input_size(), 1);
  const auto w = filled(g.out_channels * g.patch_size(), 2);
  std::vector<float> y(g.batch * g.output_size());
  for (auto _ : s) {
    std::fill(y.begin(), y.end(), 0.f);
    if constexpr (Reference)
      k::reference::conv2d_forward<float>(g, x, w, y);
    else
      k::conv2d_forward<float>(g, x, w, y);
    benchmark::DoNotOptimize(y.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<long>(g.batch * g.output_size() * g.patch_size()));
}

template <bool Reference>
void gemm(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const auto a = filled(n * n, 3), b = filled(n * n, 4);
  std::vector<float> c(n * n);
  for (auto _ : s) {
    std::fill(c.begin(), c.end(), 0.f);
    if constexpr (Reference)
      k::reference::gemm_nn<float>(n, n, n, a, b, c);
    else
      k::gemm_nn<float>(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<long>(n * n * n));
}

}  // namespace

BENCHMARK(conv_forward<true>)->Name("conv2d_forward/reference")->Args({8, 32})->Args({16, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(conv_forward<false>)->Name("conv2d_forward/openmp")->Args({8, 32})->Args({16, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<true>)->Name("gemm_nn/reference")->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<false>)->Name("gemm_nn/openmp")->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
