#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gnk/graph.hpp"
#include "gnk/linalg.hpp"

namespace gnk::test {

inline Mat randn(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Mat M(rows, cols);
  for (Eigen::Index k = 0; k < M.size(); ++k) M.data()[k] = N(rng);
  return M;
}

// Scaled Wishart draw G^T G / k with k = n + 2.
inline Mat random_psd(int n, std::uint64_t seed, double scale = 1.0) {
  const Mat G = randn(n + 2, n, seed);
  Mat S = scale * G.transpose() * G / static_cast<double>(n + 2);
  symmetrize(S);
  return S;
}

// Ring plus Erdos-Renyi extras: always connected.
inline Graph random_connected_graph(int n, double p, std::uint64_t seed, bool weighted = false) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> W(0.5, 2.0);
  std::vector<std::pair<int, int>> e;
  std::vector<double> w;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  if (n > 2) e.emplace_back(0, n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (!(i == 0 && j == n - 1) && coin(rng)) e.emplace_back(i, j);
  for (std::size_t k = 0; k < e.size(); ++k) w.push_back(weighted ? W(rng) : 1.0);
  return Graph::from_edges(n, e, w);
}

inline Graph random_graph(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

inline double max_abs(const Mat& M) { return M.cwiseAbs().maxCoeff(); }

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("gnk_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline std::string karate_dir() { return GNK_TEST_DATA "/karate"; }

}  // namespace gnk::test
