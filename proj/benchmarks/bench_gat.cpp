#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "gnk/gat.hpp"

using namespace gnk;

static void BM_ContractFast(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto A = build_adjacency(bench::sparse_graph(n, 2, 4), AdjMode::self_loops);
  const Mat G = bench::randn(16, n, 5);
  const Mat O = G.transpose() * G / 16.0;
  const Mat W = bench::randn(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(contract_fast(A.matrix, O, W));
  state.SetComplexityN(n);
}
BENCHMARK(BM_ContractFast)->RangeMultiplier(2)->Range(64, 512)->Complexity();

static void BM_GatNtk(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto A = build_adjacency(bench::sparse_graph(n, 2, 7), AdjMode::self_loops);
  const Mat X = bench::randn(16, n, 8);
  GatSpec s;
  s.depth = 3;
  for (auto _ : state) benchmark::DoNotOptimize(gat_ntk(s, A, X));
}
BENCHMARK(BM_GatNtk)->Arg(64)->Arg(256);
