#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnk/graph.hpp"

namespace gnk {

struct ResistanceOptions {
  int exact_limit = 5000;  // above this node count use the sketch
  double eps = 0.3;
  double sketch_const = 4.0;  // k = ceil(sketch_const * ln n / eps^2) random projections
  std::uint64_t seed = 0;
  double cg_tol = 1e-10;
  int cg_max_iter = 5000;
};

struct ResistanceTable {
  std::vector<double> R;  // aligned with graph.edges
  bool exact = true;
};

ResistanceTable effective_resistances(const Graph& g, const ResistanceOptions& opt = {});

// Dense pseudoinverse of the weighted Laplacian via its eigendecomposition (test oracle).
Mat laplacian_pinv_dense(const Graph& g);

struct SparsifyResult {
  Graph graph;
  std::vector<std::size_t> kept;  // indices into the input edge list, ascending
  std::vector<double> inclusion;  // inclusion probability used for reweighting, per kept edge
};

// Keeps ceil(keep_fraction * m) edges sampled without replacement with weight w_e R_e.
// The same seed yields nested edge sets across budgets.
SparsifyResult sparsify(const Graph& g, double keep_fraction, std::uint64_t seed, bool binarize = true,
                        const ResistanceOptions& opt = {});
SparsifyResult sparsify(const Graph& g, const ResistanceTable& R, double keep_fraction, std::uint64_t seed,
                        bool binarize = true);

void write_resistances_tsv(const std::string& path, const Graph& g, const ResistanceTable& R);

}  // namespace gnk
