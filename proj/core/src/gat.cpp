#include "gnk/gat.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "gnk/errors.hpp"

namespace gnk {

const char* to_string(Placement p) {
  return p == Placement::inside ? "inside" : "hadamard_first";
}

Placement parse_placement(const std::string& s) {
  if (s == "inside") return Placement::inside;
  if (s == "hadamard_first" || s == "hadamard-first" || s == "hadamard") return Placement::hadamard_first;
  throw ValidationError("unknown sigma1 placement '" + s + "'");
}

void GatSpec::validate() const {
  if (depth < 1) throw ValidationError("depth must be >= 1");
  hp.validate();
  if (!sigma1.has_closed_form() || !sigma2.has_closed_form())
    throw ValidationError("GAT kernels need closed-form activations");
  if (placement == Placement::hadamard_first && sigma1(0.0) != 0.0)
    throw ValidationError("hadamard_first placement requires sigma1(0) = 0");
}

LiftedKernel::LiftedKernel(Mat A, Mat Omega, LiftRealization r) : A_(std::move(A)), Omega_(std::move(Omega)) {
  if (A_.rows() != A_.cols() || Omega_.rows() != Omega_.cols() || A_.rows() != Omega_.rows())
    throw ValidationError("gamma_A: A and Omega must be square of equal size");
  if (r == LiftRealization::dense) {
    if (A_.rows() > kDenseLiftLimit)
      throw CapacityError("dense lift requested for n=" + std::to_string(A_.rows()) + " > " +
                          std::to_string(kDenseLiftLimit));
    const Mat J = lift_jacobian(A_);
    const Eigen::Index n = A_.rows();
    Mat B(2 * n, 2 * n);
    B << Omega_, Omega_, Omega_, Omega_;
    dense_ = J * B * J.transpose();
  }
}

double LiftedKernel::operator()(int l, int m, int s, int t) const {
  const int n = this->n();
  if (dense_) return (*dense_)(l + m * n, s + t * n);
  return A_(l, m) * A_(s, t) * (Omega_(l, s) + Omega_(l, t) + Omega_(m, s) + Omega_(m, t));
}

Mat LiftedKernel::to_dense() const {
  if (dense_) return *dense_;
  const int n = this->n();
  if (n > kDenseLiftLimit) throw CapacityError("cannot materialize lift beyond n=64");
  Mat out(n * n, n * n);
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l)
      for (int t = 0; t < n; ++t)
        for (int s = 0; s < n; ++s) out(l + m * n, s + t * n) = (*this)(l, m, s, t);
  return out;
}

LiftedKernel gamma_A(const Mat& A, const Mat& Omega, LiftRealization r) {
  return LiftedKernel(A, Omega, r);
}

Mat lift_jacobian(const Mat& A) {
  const Eigen::Index n = A.rows();
  const Mat ones = Mat::Ones(n, 1);
  const Mat I = Mat::Identity(n, n);
  Mat P = Eigen::kroneckerProduct(ones, I);
  Mat Q = Eigen::kroneckerProduct(I, ones);
  Mat C(n * n, 2 * n);
  C << P, Q;
  const Vec vecA = Eigen::Map<const Vec>(A.data(), n * n);
  return vecA.asDiagonal() * C;
}

Mat batch_multiply(const Mat& X, const Mat& Y) {
  const Eigen::Index n = X.rows();
  if (X.cols() != n || n == 0) throw ValidationError("bm: X must be square and nonempty");
  if (Y.rows() != Y.cols() || Y.rows() % n != 0)
    throw ValidationError("bm: Y must be square with size a multiple of " + std::to_string(n));
  const Eigen::Index z = Y.rows() / n;
  Mat out(z, z);
  for (Eigen::Index J = 0; J < z; ++J)
    for (Eigen::Index I = 0; I < z; ++I) out(I, J) = X.cwiseProduct(Y.block(I * n, J * n, n, n)).sum();
  return out;
}

Mat batch_multiply(const Mat& X, const LiftedKernel& Y) {
  const int n = Y.n();
  if (X.rows() != n || X.cols() != n) throw ValidationError("bm: X must be n x n for a lift of size n");
  Mat out = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int t = 0; t < n; ++t)
        for (int s = 0; s < n; ++s) acc += X(s, t) * Y(s, i, t, j);
      out(i, j) = acc;
    }
  return out;
}

Mat contract_fast(const SpMat& A, const Mat& Omega, const Mat& W) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Omega.rows() != n || Omega.cols() != n || W.rows() != n || W.cols() != n)
    throw ValidationError("contract_fast: shape mismatch");
  // With B = A^T: M = O.(B W B^T) + B((W B^T).O) + ((B W).O) B^T + B (W.O) B^T
  const SpMat B = A.transpose();
  Mat WBt = W * A;    // W B^T
  Mat BW = B * W;
  Mat M = Omega.cwiseProduct(B * WBt);
  M += B * WBt.cwiseProduct(Omega);
  M += BW.cwiseProduct(Omega) * A;
  Mat WO = W.cwiseProduct(Omega);
  M += B * (WO * A);
  return M;
}

namespace {

void check_symmetric(const SpMat& A) {
  if (A.rows() != A.cols()) throw ValidationError("GAT adjacency must be square");
  const SpMat D = A - SpMat(A.transpose());
  double worst = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SpMat::InnerIterator it(D, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  if (worst > 1e-12) throw ValidationError("GAT kernels require a symmetric adjacency");
}

struct SupportPair {
  int s, i;  // within-block row s, block column i
  double a;  // A(s, i)
};

std::vector<SupportPair> support(const SpMat& A) {
  std::vector<SupportPair> P;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      if (it.value() != 0.0) P.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  return P;
}

double four(const Mat& O, int s, int i, int t, int j) { return O(s, t) + O(s, j) + O(i, t) + O(i, j); }

// Pairwise evaluation of one attention layer over the support of A. Returns the next
// pre-activation covariance; when theta_out is set also the four-term NTK update.
Mat attention_layer_pairwise(const GatSpec& spec, const SpMat& A, const Mat& lam, const Mat& Wt,
                             const Mat* T, Mat* theta_out) {
  const int n = static_cast<int>(A.rows());
  const double c2 = spec.hp.sigma_c2, w2 = spec.hp.sigma_w2;
  const auto P = support(A);
  Mat K = Mat::Zero(n, n);
  if (theta_out) *theta_out = Mat::Zero(n, n);

  const bool hadamard = spec.placement == Placement::hadamard_first;
  Mat D, Dd;
  std::vector<double> gdiag(P.size());
  if (hadamard) {
    Mat S = c2 * lam;
    D = dual_activation(spec.sigma1, S);
    Dd = dual_activation_derivative(spec.sigma1, S);
  } else {
    for (std::size_t p = 0; p < P.size(); ++p)
      gdiag[p] = c2 * P[p].a * P[p].a * four(lam, P[p].s, P[p].i, P[p].s, P[p].i);
  }

  for (std::size_t q = 0; q < P.size(); ++q) {
    const auto [t, j, aq] = P[q];
    for (std::size_t p = 0; p < P.size(); ++p) {
      const auto [s, i, ap] = P[p];
      const double g = ap * aq * four(lam, s, i, t, j);
      double psi, psid;
      if (hadamard) {
        psi = ap * aq * four(D, s, i, t, j);
        psid = 0.25 * four(Dd, s, i, t, j);
      } else {
        const double v = c2 * g;
        check_pair(gdiag[p], gdiag[q], v);
        psi = dual_pair(spec.sigma1, gdiag[p], gdiag[q], v);
        psid = theta_out ? dual_pair_derivative(spec.sigma1, gdiag[p], gdiag[q], v) : 0.0;
      }
      K(i, j) += Wt(s, t) * psi;
      if (theta_out) {
        const double gT = ap * aq * four(*T, s, i, t, j);
        (*theta_out)(i, j) += Wt(s, t) * (psi + c2 * g * psid + c2 * gT * psid) + w2 * (*T)(s, t) * psi;
      }
    }
  }
  symmetrize(K);
  if (theta_out) symmetrize(*theta_out);
  return K;
}

}  // namespace

KernelState gat_kernels(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X, bool force_general) {
  spec.validate();
  check_symmetric(A.matrix);
  if (A.n() != X.cols())
    throw ValidationError("adjacency size " + std::to_string(A.n()) + " != feature columns " +
                          std::to_string(X.cols()));
  const double w2 = spec.hp.sigma_w2, b2 = spec.bias ? spec.hp.sigma_b2 : 0.0, c2 = spec.hp.sigma_c2;
  const bool linear_sigma1 = spec.sigma1.kind == ActKind::identity;
  const int n = A.n();
  const bool pairwise = force_general || !linear_sigma1;
  if (pairwise && spec.depth > 1) {
    if (spec.placement == Placement::inside && n > kDenseLiftLimit)
      throw CapacityError("sigma1 inside the lift with a non-identity activation needs n <= 64 (n=" +
                          std::to_string(n) + ")");
    if (spec.placement == Placement::hadamard_first && A.matrix.nonZeros() > kDenseLiftLimit * kDenseLiftLimit)
      throw CapacityError("pairwise NTK evaluation needs nnz(A) <= 4096");
  }

  HyperParams hp = spec.hp;
  hp.sigma_b2 = b2;
  Mat K = base_kernel(X, hp);
  Mat theta = K;
  for (int l = 2; l <= spec.depth; ++l) {
    const Mat lam = dual_activation(spec.sigma2, K);
    const Mat lam_dot = dual_activation_derivative(spec.sigma2, K);
    Mat Wt = w2 * lam;
    Wt.array() += b2;
    const Mat T = theta.cwiseProduct(lam_dot);
    Mat Kn, Tn;
    if (!pairwise) {
      // sigma1 = identity: psi = c2 gamma_A(lam) under either placement.
      const Mat base = contract_fast(A.matrix, lam, Wt);
      Kn = c2 * base;
      Tn = 2.0 * c2 * base + c2 * contract_fast(A.matrix, T, Wt) + w2 * c2 * contract_fast(A.matrix, lam, T);
      symmetrize(Tn);
    } else {
      Kn = attention_layer_pairwise(spec, A.matrix, lam, Wt, &T, &Tn);
    }
    symmetrize(Kn);
    K = std::move(Kn);
    theta = std::move(Tn);
  }
  KernelState st;
  st.lambda = K;
  st.theta = theta;
  st.layer = spec.depth;
  return st;
}

Mat gat_gp(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X) {
  spec.validate();
  const bool fast = spec.sigma1.kind == ActKind::identity || spec.placement == Placement::hadamard_first;
  if (!fast) return gat_kernels(spec, A, X).lambda;
  check_symmetric(A.matrix);
  if (A.n() != X.cols()) throw ValidationError("adjacency/feature size mismatch");
  const double w2 = spec.hp.sigma_w2, b2 = spec.bias ? spec.hp.sigma_b2 : 0.0, c2 = spec.hp.sigma_c2;
  HyperParams hp = spec.hp;
  hp.sigma_b2 = b2;
  Mat K = base_kernel(X, hp);
  for (int l = 2; l <= spec.depth; ++l) {
    const Mat lam = dual_activation(spec.sigma2, K);
    Mat Wt = w2 * lam;
    Wt.array() += b2;
    const Mat D = spec.sigma1.kind == ActKind::identity ? Mat(c2 * lam) : dual_activation(spec.sigma1, c2 * lam);
    K = contract_fast(A.matrix, D, Wt);
    symmetrize(K);
  }
  return K;
}

Mat gat_ntk(const GatSpec& spec, const AdjacencyOperator& A, const Mat& X) {
  return gat_kernels(spec, A, X).theta;
}

}  // namespace gnk
