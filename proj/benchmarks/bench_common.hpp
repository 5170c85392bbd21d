#pragma once

#include <random>
#include <vector>

#include "gnk/graph.hpp"

namespace gnk::bench {

inline Mat randn(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  Mat M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = N(rng);
  return M;
}

// ring plus roughly `extra` random chords per node
inline Graph sparse_graph(int n, int extra, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  for (int k = 0; k < extra * n; ++k) {
    const int u = pick(rng), v = pick(rng);
    if (u != v) e.emplace_back(u, v);
  }
  return Graph::from_edges(n, e);
}

}  // namespace gnk::bench
