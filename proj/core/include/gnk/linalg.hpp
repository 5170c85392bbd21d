#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gnk {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// K <- (K + K^T) / 2, in place.
void symmetrize(Mat& K);

// Smallest eigenvalue of a symmetric matrix (dense solver).
double min_eigenvalue(const Mat& K);

// Largest |eigenvalue| of a symmetric matrix.
double spectral_norm_sym(const Mat& K);

// Symmetric square root with negative eigenvalues clamped to zero.
Mat psd_sqrt(const Mat& K);

// ||a - b||_F / ||b||_F
double rel_frobenius(const Mat& a, const Mat& b);

struct JitteredCholesky {
  Eigen::LLT<Mat> llt;
  double jitter = 0.0;
};

// Cholesky of K + j*I, trying j = jitter0, 10*jitter0, ... up to max_jitter.
// Throws NumericalError when every attempt fails.
JitteredCholesky cholesky_with_jitter(const Mat& K, double jitter0, double max_jitter);

}  // namespace gnk
