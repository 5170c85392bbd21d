#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "common.hpp"
#include "gnk/errors.hpp"
#include "gnk/sparsifier.hpp"

using namespace gnk;
using namespace gnk::test;

namespace {

// Independent oracle: pseudoinverse through a complete orthogonal decomposition.
std::vector<double> resistances_oracle(const Graph& g) {
  const Mat L = build_adjacency(g, AdjMode::laplacian).dense();
  const Mat P = L.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> R;
  for (const auto& [u, v] : g.edges) R.push_back(P(u, u) + P(v, v) - 2 * P(u, v));
  return R;
}

Mat weighted_laplacian(const Graph& g) {
  Mat L = Mat::Zero(g.n, g.n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [u, v] = g.edges[e];
    const double w = g.weights[e];
    L(u, u) += w;
    L(v, v) += w;
    L(u, v) -= w;
    L(v, u) -= w;
  }
  return L;
}

Graph path_tree(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back((i - 1) / 2, i);
  return Graph::from_edges(n, e);
}

Graph cycle(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

}  // namespace

TEST(Resistance, TreeEdgesAreOne) {
  const auto R = effective_resistances(path_tree(15));
  for (double r : R.R) EXPECT_NEAR(r, 1.0, 1e-12);
}

TEST(Resistance, Triangle) {
  const auto R = effective_resistances(cycle(3));
  for (double r : R.R) EXPECT_NEAR(r, 2.0 / 3.0, 1e-12);
}

TEST(Resistance, Cycle) {
  for (int n : {4, 7, 20}) {
    const auto R = effective_resistances(cycle(n));
    const auto O = resistances_oracle(cycle(n));
    for (std::size_t e = 0; e < R.R.size(); ++e) {
      EXPECT_NEAR(R.R[e], (n - 1.0) / n, 1e-12);
      EXPECT_NEAR(O[e], (n - 1.0) / n, 1e-12);
    }
  }
}

TEST(Resistance, MatchesPseudoinverseOracleAcrossComponents) {
  // two components plus an isolated node
  std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {0, 2}, {2, 3}, {5, 6}, {6, 7}, {5, 7}, {7, 8}};
  const Graph g = Graph::from_edges(10, e, {1.0, 2.0, 0.5, 1.5, 1.0, 1.0, 3.0, 0.25});
  const auto R = effective_resistances(g);
  const auto O = resistances_oracle(g);
  for (std::size_t k = 0; k < O.size(); ++k) EXPECT_NEAR(R.R[k], O[k], 1e-12);
  const Mat P = laplacian_pinv_dense(g);
  const Mat L = build_adjacency(g, AdjMode::laplacian).dense();
  EXPECT_LT(max_abs(L * P * L - L), 1e-10);
}

TEST(ResistanceProperty, FosterIdentity) {
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 20 + 18 * trial;
    const Graph g = random_connected_graph(n, 6.0 / n, 70 + trial, trial % 2 == 1);
    const auto R = effective_resistances(g);
    double sum = 0.0;
    for (std::size_t e = 0; e < R.R.size(); ++e) {
      sum += g.weights[e] * R.R[e];
      EXPECT_LE(R.R[e], 1.0 / g.weights[e] + 1e-12);
      EXPECT_GT(R.R[e], 0.0);
    }
    EXPECT_NEAR(sum, n - g.num_components(), 1e-8);
  }
}

TEST(Resistance, SketchApproximatesExact) {
  const Graph g = random_connected_graph(120, 0.05, 5);
  ResistanceOptions opt;
  opt.exact_limit = 50;
  opt.seed = 9;
  const auto S = effective_resistances(g, opt);
  const auto E = effective_resistances(g);
  EXPECT_FALSE(S.exact);
  EXPECT_TRUE(E.exact);
  double foster = 0.0;
  int within = 0;
  for (std::size_t e = 0; e < E.R.size(); ++e) {
    foster += S.R[e];
    within += std::abs(S.R[e] - E.R[e]) <= 0.3 * E.R[e];
  }
  EXPECT_GE(within, static_cast<int>(0.9 * E.R.size()));
  EXPECT_NEAR(foster, 119.0, 0.1 * 119.0);
}

TEST(Sparsify, KeepAllReturnsInput) {
  const Graph g = random_connected_graph(30, 0.2, 1, true);
  const auto r = sparsify(g, 1.0, 3, true);
  EXPECT_EQ(r.graph.edges, g.edges);
  for (double w : r.graph.weights) EXPECT_EQ(w, 1.0);
}

TEST(Sparsify, ExactBudgetDeterministicNested) {
  const Graph g = random_connected_graph(80, 0.1, 2);
  const auto a = sparsify(g, 0.3, 17, true);
  const auto b = sparsify(g, 0.3, 17, true);
  const auto c = sparsify(g, 0.6, 17, true);
  EXPECT_EQ(a.kept.size(), static_cast<std::size_t>(std::ceil(0.3 * g.num_edges())));
  EXPECT_EQ(a.graph.edges, b.graph.edges);
  EXPECT_TRUE(std::includes(c.kept.begin(), c.kept.end(), a.kept.begin(), a.kept.end()));
  EXPECT_NE(sparsify(g, 0.3, 18, true).kept, a.kept);
}

TEST(Sparsify, TreeSamplingIsUniform) {
  // All resistances equal: every edge's inclusion probability is the budget fraction.
  const Graph g = path_tree(41);
  const auto r = sparsify(g, 0.25, 4, false);
  for (double p : r.inclusion) EXPECT_NEAR(p, 10.0 / 40.0, 1e-12);
  std::vector<int> hits(40, 0);
  for (std::uint64_t s = 0; s < 2000; ++s)
    for (auto k : sparsify(g, effective_resistances(g), 0.25, s, true).kept) ++hits[k];
  for (int h : hits) EXPECT_NEAR(h / 2000.0, 0.25, 0.06);
}

TEST(Sparsify, Errors) {
  const Graph g = cycle(5);
  EXPECT_THROW(sparsify(g, 0.0, 1), ValidationError);
  EXPECT_THROW(sparsify(g, 1.5, 1), ValidationError);
  EXPECT_THROW(sparsify(Graph::from_edges(3, {}), 0.5, 1), ValidationError);
}

TEST(SparsifyProperty, SpectralFidelityWeighted) {
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 100 + 50 * trial;
    const Graph g = random_connected_graph(n, 0.15, 40 + trial);
    const auto r = sparsify(g, 0.5, 7 + trial, false);
    const Mat L = weighted_laplacian(g);
    const Mat Lt = weighted_laplacian(r.graph);
    int ok = 0;
    for (int k = 0; k < 100; ++k) {
      Vec x = randn(n, 1, 1000 * trial + k).col(0);
      x.array() -= x.mean();
      x.normalize();
      const double q = x.dot(L * x), qt = x.dot(Lt * x);
      ok += std::abs(qt - q) <= 0.5 * q;
    }
    EXPECT_GE(ok, 90) << "n=" << n;
  }
}

TEST(Sparsify, ResistanceFile) {
  const std::string path = temp_dir("res") + "/edges_resistance.tsv";
  const Graph g = cycle(3);
  write_resistances_tsv(path, g, effective_resistances(g));
  std::ifstream in(path);
  int u, v;
  double R;
  int lines = 0;
  while (in >> u >> v >> R) {
    EXPECT_NEAR(R, 2.0 / 3.0, 1e-12);
    ++lines;
  }
  EXPECT_EQ(lines, 3);
}
