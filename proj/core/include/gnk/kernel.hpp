#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnk/activation.hpp"
#include "gnk/graph.hpp"

namespace gnk {

enum class Arch { fcn, gnn, skip_gnn };
const char* to_string(Arch a);
Arch parse_arch(const std::string& s);

struct ModelSpec {
  Arch arch = Arch::gnn;
  int depth = 2;
  HyperParams hp;
  Activation act = Activation::relu();
  // Add sigma_b2 to the derivative kernel as well (the usual closed-form statement).
  // The finite network's Jacobian Gram matches the form without it; see README.
  bool bias_in_derivative = true;
  // Activations without a closed form (sigmoid, exp) go through the sampling oracle.
  std::int64_t oracle_samples = 0;
  std::uint64_t oracle_seed = 0;

  void validate() const;
};

struct KernelState {
  Mat lambda;  // output GP covariance
  Mat theta;   // NTK
  int layer = 0;
};

Mat base_kernel(const Mat& X, const HyperParams& hp);

// M -> A M A^T for sparse A, symmetrized.
Mat conjugate(const SpMat& A, const Mat& M);

Mat compute_gp(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X);
Mat compute_ntk(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X);
// Both kernels from one pass of the joint recursion.
KernelState compute_kernels(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X);

// Closed sum-of-products form of the fcn NTK, used as a cross-check.
Mat nonrecursive_ntk(const ModelSpec& spec, const Mat& X);

enum class KernelKind { gp, ntk };

struct GraphSample {
  AdjacencyOperator A;
  Mat X;  // d0 x n_i
};

// Graph-level Gram with sum pooling: entry (i,j) sums the cross-kernel block (i,j).
Mat inductive_gram(const std::vector<GraphSample>& samples, const ModelSpec& spec, KernelKind kind);

// Binary kernel file: "GNTKMAT1", u64 LE n, n*n f64 LE row-major.
void write_kernel(const std::string& path, const Mat& K);
Mat read_kernel(const std::string& path);

}  // namespace gnk
