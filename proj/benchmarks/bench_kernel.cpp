#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "gnk/kernel.hpp"

using namespace gnk;

static void BM_GnnNtk(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto A = build_adjacency(bench::sparse_graph(n, 2, 1), AdjMode::kipf);
  const Mat X = bench::randn(64, n, 2);
  ModelSpec s;
  s.depth = 3;
  for (auto _ : state) benchmark::DoNotOptimize(compute_ntk(s, A, X));
  state.SetComplexityN(n);
}
BENCHMARK(BM_GnnNtk)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

static void BM_DualRelu(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mat X = bench::randn(32, n, 3);
  const Mat S = X.transpose() * X / 32.0;
  for (auto _ : state) benchmark::DoNotOptimize(dual_activation(Activation::relu(), S));
}
BENCHMARK(BM_DualRelu)->Arg(256)->Arg(1024);
