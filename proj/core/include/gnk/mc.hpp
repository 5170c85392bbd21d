#pragma once

#include <cstdint>
#include <vector>

#include "gnk/finite.hpp"

namespace gnk {

struct McOptions {
  int draws = 2000;
  std::uint64_t seed = 0;
  // Average the conditional covariance of the last layer instead of sampled outputs.
  bool rao_blackwell = true;
};

// Monte-Carlo output covariance (n x n, per output unit) of a random network with the
// given hidden widths. Hidden layers are sampled row-wise from their exact conditional
// Gaussian law, so the cost does not grow with the parameter count.
Mat mc_gp(const NetSpec& spec, const std::vector<int>& widths, int heads, const AdjacencyOperator& A,
          const Mat& X, const McOptions& opt = {});

// Same quantity from explicit weight draws: mean over draws of F^T F / d_L.
Mat mc_gp_direct(const NetSpec& spec, const std::vector<int>& widths, int heads, const AdjacencyOperator& A,
                 const Mat& X, int draws, std::uint64_t seed);

// Empirical NTK averaged over `seeds` initializations and over the diagonal output
// blocks (n x n).
Mat mean_empirical_ntk(const NetSpec& spec, const std::vector<int>& widths, int heads,
                       const AdjacencyOperator& A, const Mat& X, int seeds, std::uint64_t seed0);

}  // namespace gnk
