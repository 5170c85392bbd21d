#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gnk/linalg.hpp"

namespace gnk {

// Undirected simple graph. Edges are stored once with u < v.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;

  // Canonicalizes (u, v) to u < v and drops repeated pairs (first weight wins).
  // Index out of range or u == v -> FormatError; non-positive weight -> ValidationError.
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& pairs,
                          const std::vector<double>& weights = {});

  std::size_t num_edges() const { return edges.size(); }
  std::vector<double> degrees() const;
  // Weighted adjacency (symmetric, zero diagonal).
  SpMat adjacency() const;
  int num_components() const;
  // Component id per node, ids dense in [0, num_components).
  std::vector<int> components() const;
};

enum class AdjMode { identity, raw01, self_loops, laplacian, kipf };

const char* to_string(AdjMode m);
AdjMode parse_adj_mode(const std::string& s);

struct AdjacencyOperator {
  AdjMode mode = AdjMode::identity;
  SpMat matrix;

  int n() const { return static_cast<int>(matrix.rows()); }
  Mat dense() const { return Mat(matrix); }
  bool is_identity() const { return mode == AdjMode::identity; }
};

AdjacencyOperator build_adjacency(const Graph& g, AdjMode mode);
// Wraps an arbitrary (possibly non-symmetric) dense matrix; used by property tests.
AdjacencyOperator adjacency_from_dense(const Mat& A);

enum class Task { classification, regression };
const char* to_string(Task t);

struct NodeDataset {
  std::string name;
  Graph graph;
  Mat features;  // d0 x n
  Vec labels;    // class id as double, -1 = unlabeled; NaN = unlabeled regression target
  Task task = Task::classification;
  int num_classes = 0;

  int n() const { return graph.n; }
  int d0() const { return static_cast<int>(features.rows()); }
  bool labeled(int i) const;
};

enum class Split : std::uint8_t { none, train, val, test };
const char* to_string(Split s);
Split parse_split(const std::string& s);

struct SplitMask {
  std::vector<Split> assignment;

  std::vector<int> indices(Split s) const;
  std::size_t count(Split s) const;
};

struct HyperParams {
  double sigma_w2 = 1.0;
  double sigma_b2 = 0.0;
  double sigma_c2 = 1.0;
  bool normalize_input_by_d0 = true;

  void validate() const;
};

void validate_split(const SplitMask& mask, const NodeDataset& data);

struct Bundle {
  NodeDataset data;
  SplitMask split;
};

Bundle load_bundle(const std::string& dir);
void write_bundle(const std::string& dir, const NodeDataset& data, const SplitMask& split);

// edges.tsv: "u<TAB>v" per line, optional third weight column.
Graph read_edges_tsv(const std::string& path, int n);
void write_edges_tsv(const std::string& path, const Graph& g);

}  // namespace gnk
