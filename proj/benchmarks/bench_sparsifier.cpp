#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "gnk/sparsifier.hpp"

using namespace gnk;

static void BM_ResistancesExact(benchmark::State& state) {
  const Graph g = bench::sparse_graph(static_cast<int>(state.range(0)), 3, 9);
  for (auto _ : state) benchmark::DoNotOptimize(effective_resistances(g));
}
BENCHMARK(BM_ResistancesExact)->Arg(500)->Arg(2000);

static void BM_ResistancesSketch(benchmark::State& state) {
  const Graph g = bench::sparse_graph(static_cast<int>(state.range(0)), 3, 10);
  ResistanceOptions opt;
  opt.exact_limit = 0;
  for (auto _ : state) benchmark::DoNotOptimize(effective_resistances(g, opt));
}
BENCHMARK(BM_ResistancesSketch)->Arg(2000)->Arg(10000);

static void BM_Sparsify(benchmark::State& state) {
  const Graph g = bench::sparse_graph(2000, 3, 11);
  const auto R = effective_resistances(g);
  for (auto _ : state) benchmark::DoNotOptimize(sparsify(g, R, 0.1, 1));
}
BENCHMARK(BM_Sparsify);
