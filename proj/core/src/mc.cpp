#include "gnk/mc.hpp"

#include <cmath>
#include <random>

namespace gnk {

namespace {

Mat standard_normal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat Z(rows, cols);
  for (Eigen::Index k = 0; k < Z.size(); ++k) Z.data()[k] = N(rng);
  return Z;
}

// rows ~ N(0, C)
Mat sample_rows(const Mat& C, int rows, std::mt19937_64& rng) {
  return standard_normal(rows, static_cast<int>(C.rows()), rng) * psd_sqrt(C);
}

Mat apply(const Activation& a, const Mat& M) {
  return M.unaryExpr([&](double x) { return a(x); });
}

// Row covariance of the next pre-activation given the layer input G (fan x n).
Mat dense_cov(const Mat& G, const HyperParams& hp, bool bias) {
  Mat C = (hp.sigma_w2 / static_cast<double>(G.rows())) * (G.transpose() * G);
  if (bias) C.array() += hp.sigma_b2;
  return C;
}

Mat attention_cov(const NetSpec& spec, const Mat& G, const Mat& A, int heads, std::mt19937_64& rng) {
  const int n = static_cast<int>(G.cols());
  const Mat Gram = G.transpose() * G / static_cast<double>(G.rows());
  const Mat Cv = dense_cov(G, spec.hp, spec.bias);
  const Mat Sz = psd_sqrt(spec.hp.sigma_c2 * Gram);
  std::normal_distribution<double> N(0.0, 1.0);
  Mat C = Mat::Zero(n, n);
  Vec u(n);
  Mat Lk(n, n);
  for (int k = 0; k < heads; ++k) {
    for (int i = 0; i < n; ++i) u(i) = N(rng);
    const Vec z = Sz * u;
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) Lk(a, b) = A(a, b) * (z(a) + z(b));
    const Mat P = apply(spec.sigma1, Lk);
    C.noalias() += P.transpose() * Cv * P;
  }
  C /= static_cast<double>(heads);
  symmetrize(C);
  return C;
}

}  // namespace

Mat mc_gp(const NetSpec& spec, const std::vector<int>& widths, int heads, const AdjacencyOperator& A,
          const Mat& X, const McOptions& opt) {
  spec.hp.validate();
  if (widths.size() < 2) throw ValidationError("network needs at least one layer");
  if (opt.draws < 1) throw ValidationError("draws must be >= 1");
  if (X.rows() != widths[0]) throw ValidationError("feature dimension does not match the network");
  const int L = static_cast<int>(widths.size()) - 1;
  const int n = static_cast<int>(X.cols());
  if (spec.arch == NetArch::skip_gnn && L < 2) throw ValidationError("skip_gnn needs depth >= 2");
  const bool graph = spec.arch == NetArch::gnn || spec.arch == NetArch::skip_gnn;
  Mat Ad;
  if (spec.arch != NetArch::fcn) Ad = A.dense();
  if (spec.arch != NetArch::fcn && Ad.rows() != n) throw ValidationError("adjacency size does not match features");

  Mat acc = Mat::Zero(n, n);
  for (int t = 0; t < opt.draws; ++t) {
    std::mt19937_64 rng(opt.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1));
    Mat G = X;
    Mat C;
    for (int h = 1; h <= L; ++h) {
      if (spec.arch == NetArch::gat && h > 1) {
        C = attention_cov(spec, G, Ad, heads, rng);
      } else {
        C = dense_cov(G, spec.hp, spec.bias);
        if (graph) C = Ad * C * Ad.transpose();
      }
      if (h == L) break;
      const Mat F = sample_rows(C, widths[h], rng);
      if (spec.arch == NetArch::skip_gnn) {
        Mat next(2 * F.rows(), n);
        next.topRows(F.rows()) = apply(spec.act, F);
        next.bottomRows(F.rows()) = F;
        G = std::move(next);
      } else {
        G = apply(spec.act, F);
      }
    }
    if (opt.rao_blackwell) {
      acc += C;
    } else {
      const Mat F = sample_rows(C, widths[L], rng);
      acc += F.transpose() * F / static_cast<double>(widths[L]);
    }
  }
  acc /= static_cast<double>(opt.draws);
  symmetrize(acc);
  return acc;
}

Mat mc_gp_direct(const NetSpec& spec, const std::vector<int>& widths, int heads, const AdjacencyOperator& A,
                 const Mat& X, int draws, std::uint64_t seed) {
  if (draws < 1) throw ValidationError("draws must be >= 1");
  const int n = static_cast<int>(X.cols());
  Mat acc = Mat::Zero(n, n);
  for (int t = 0; t < draws; ++t) {
    const FiniteNet net = init_network(spec, widths, heads, seed + static_cast<std::uint64_t>(t));
    const Mat F = forward(net, A, X);
    acc += F.transpose() * F / static_cast<double>(F.rows());
  }
  acc /= static_cast<double>(draws);
  symmetrize(acc);
  return acc;
}

Mat mean_empirical_ntk(const NetSpec& spec, const std::vector<int>& widths, int heads,
                       const AdjacencyOperator& A, const Mat& X, int seeds, std::uint64_t seed0) {
  if (seeds < 1) throw ValidationError("seeds must be >= 1");
  const int n = static_cast<int>(X.cols());
  const int dL = widths.back();
  Mat acc = Mat::Zero(n, n);
  for (int t = 0; t < seeds; ++t) {
    const FiniteNet net = init_network(spec, widths, heads, seed0 + static_cast<std::uint64_t>(t));
    const Mat K = empirical_ntk(net, A, X);
    // vec index o + j d_L: average the diagonal output blocks.
    for (int o = 0; o < dL; ++o)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) acc(i, j) += K(o + i * dL, o + j * dL) / dL;
  }
  acc /= static_cast<double>(seeds);
  return acc;
}

}  // namespace gnk
