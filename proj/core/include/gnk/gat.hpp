#pragma once

#include <optional>
#include <string>

#include "gnk/activation.hpp"
#include "gnk/graph.hpp"
#include "gnk/kernel.hpp"

namespace gnk {

enum class Placement { inside, hadamard_first };
const char* to_string(Placement p);
Placement parse_placement(const std::string& s);

// Depth L: one linear input layer followed by L-1 attention layers.
struct GatSpec {
  int depth = 2;
  HyperParams hp;
  Activation sigma1 = Activation::identity();  // attention nonlinearity
  Activation sigma2 = Activation::leaky(0.2);  // layer nonlinearity
  Placement placement = Placement::inside;
  bool bias = false;

  void validate() const;
};

enum class LiftRealization { dense, implicit };

// Pair-space operator gamma_A(Omega), indexed by column-major pairs (l,m) -> l + m*n.
class LiftedKernel {
 public:
  LiftedKernel(Mat A, Mat Omega, LiftRealization r);

  int n() const { return static_cast<int>(A_.rows()); }
  LiftRealization realization() const { return dense_ ? LiftRealization::dense : LiftRealization::implicit; }
  // Entry ((l,m),(s,t)).
  double operator()(int l, int m, int s, int t) const;
  // Materialized n^2 x n^2 matrix (CapacityError above n = 64).
  Mat to_dense() const;

 private:
  Mat A_, Omega_;
  std::optional<Mat> dense_;
};

constexpr int kDenseLiftLimit = 64;

LiftedKernel gamma_A(const Mat& A, const Mat& Omega, LiftRealization r);
// J_A = diag(vec A) [1 (x) I, I (x) 1], n^2 x 2n.
Mat lift_jacobian(const Mat& A);

// bm(X, Y)_{IJ} = <X, Y_{IJ}>_F with n x n blocks.
Mat batch_multiply(const Mat& X, const Mat& Y);
Mat batch_multiply(const Mat& X, const LiftedKernel& Y);

// bm(W, gamma_A(Omega)) through sparse-dense products only.
Mat contract_fast(const SpMat& A, const Mat& Omega, const Mat& W);

// force_general evaluates the four-term NTK pairwise even when sigma1 is the identity.
KernelState gat_kernels(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X,
                        bool force_general = false);
Mat gat_gp(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X);
Mat gat_ntk(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X);

}  // namespace gnk
