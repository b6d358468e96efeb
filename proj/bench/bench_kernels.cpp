// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "featurescope/kernels.hpp"
#include "featurescope/rng.hpp"

namespace {

using namespace featurescope;

std::vector<double> gaussian(std::size_t count, std::uint64_t seed) {
  auto rng = SplitMix64::stream(seed, {fnv1a64("bench")});
  std::vector<double> v(count);
  for (auto& x : v) x = rng.normal();
  return v;
}

template <auto Kernel>
void BM_Euclidean(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
  const auto x = gaussian(n * d, 1);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Kernel(x, n, d, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * (n - 1) / 2));
}

template <auto Kernel>
void BM_Silhouette(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = gaussian(n * 2, 2);
  std::vector<std::size_t> codes(n);
  for (std::size_t i = 0; i < n; ++i) codes[i] = i % 3;
  std::vector<double> out(n);
  for (auto _ : state) {
    Kernel(pts, n, 2, codes, 3, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Euclidean<kernels::pairwise_euclidean_serial>)->Args({200, 768})->Args({1000, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Euclidean<kernels::pairwise_euclidean_omp>)->Args({200, 768})->Args({1000, 768})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Silhouette<kernels::silhouette_serial>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Silhouette<kernels::silhouette_omp>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
