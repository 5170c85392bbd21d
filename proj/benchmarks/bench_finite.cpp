#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "gnk/finite.hpp"

using namespace gnk;

static void BM_EmpiricalNtk(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int n = 20;
  const auto A = build_adjacency(bench::sparse_graph(n, 1, 12), AdjMode::kipf);
  const Mat X = bench::randn(8, n, 13);
  NetSpec s;
  const auto net = init_network(s, {8, width, width, 1}, 1, 14);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_ntk(net, A, X));
}
BENCHMARK(BM_EmpiricalNtk)->Arg(128)->Arg(512);

static void BM_GdEpoch(benchmark::State& state) {
  const int n = 100;
  const auto A = build_adjacency(bench::sparse_graph(n, 2, 15), AdjMode::kipf);
  const Mat X = bench::randn(16, n, 16);
  const Mat Y = bench::randn(2, n, 17);
  std::vector<int> train_nodes;
  for (int i = 0; i < n; i += 2) train_nodes.push_back(i);
  NetSpec s;
  auto net = init_network(s, {16, static_cast<int>(state.range(0)), 2}, 1, 18);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.track_ntk_every = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train(net, A, X, Y, train_nodes, cfg));
}
BENCHMARK(BM_GdEpoch)->Arg(64)->Arg(512);
