#include "gnk/linalg.hpp"

#include <cmath>
#include <string>

#include "gnk/errors.hpp"

namespace gnk {

void symmetrize(Mat& K) {
  const Eigen::Index n = K.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = 0.5 * (K(i, j) + K(j, i));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
}

double min_eigenvalue(const Mat& K) {
  if (K.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_norm_sym(const Mat& K) {
  if (K.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat psd_sqrt(const Mat& K) {
  Eigen::SelfAdjointEigenSolver<Mat> es(K);
  Vec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

double rel_frobenius(const Mat& a, const Mat& b) {
  const double den = b.norm();
  if (den == 0.0) return a.norm() == 0.0 ? 0.0 : INFINITY;
  return (a - b).norm() / den;
}

JitteredCholesky cholesky_with_jitter(const Mat& K, double jitter0, double max_jitter) {
  JitteredCholesky out;
  const Eigen::Index n = K.rows();
  double j = jitter0;
  while (true) {
    Mat M = K;
    M.diagonal().array() += j;
    out.llt.compute(M);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = j;
      return out;
    }
    if (j >= max_jitter || n == 0) break;
    j = std::min(j * 10.0, max_jitter);
    if (j <= 0.0) j = max_jitter;
  }
  throw NumericalError("Cholesky failed after jitter escalation to " + std::to_string(max_jitter));
}

}  // namespace gnk
