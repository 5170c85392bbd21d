#include "gnk/kernel.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gnk/errors.hpp"

namespace gnk {

const char* to_string(Arch a) {
  switch (a) {
    case Arch::fcn: return "fcn";
    case Arch::gnn: return "gnn";
    case Arch::skip_gnn: return "skip_gnn";
  }
  return "?";
}

Arch parse_arch(const std::string& s) {
  if (s == "fcn") return Arch::fcn;
  if (s == "gnn") return Arch::gnn;
  if (s == "skip_gnn" || s == "skip-gnn" || s == "skip") return Arch::skip_gnn;
  throw ValidationError("unknown architecture '" + s + "'");
}

void ModelSpec::validate() const {
  if (depth < 1) throw ValidationError("depth must be >= 1");
  hp.validate();
  if (!act.has_closed_form() && oracle_samples <= 0)
    throw ValidationError("activation " + act.name() + " needs oracle_samples > 0");
}

Mat base_kernel(const Mat& X, const HyperParams& hp) {
  if (X.rows() == 0) throw ValidationError("feature dimension d0 is zero");
  if (!X.allFinite()) throw ValidationError("features contain non-finite values");
  Mat K = X.transpose() * X;
  K *= hp.sigma_w2;
  if (hp.normalize_input_by_d0) K /= static_cast<double>(X.rows());
  K.array() += hp.sigma_b2;
  symmetrize(K);
  return K;
}

Mat conjugate(const SpMat& A, const Mat& M) {
  Mat AM = A * M;
  Mat out = A * AM.transpose();
  symmetrize(out);
  return out;
}

namespace {

Mat dual(const ModelSpec& spec, const Mat& S, bool derivative) {
  if (spec.act.has_closed_form())
    return derivative ? dual_activation_derivative(spec.act, S) : dual_activation(spec.act, S);
  return mc_dual_oracle(spec.act, S, spec.oracle_samples, spec.oracle_seed, derivative);
}

void check_shapes(const AdjacencyOperator& A, const Mat& X) {
  if (A.matrix.rows() != A.matrix.cols()) throw ValidationError("adjacency must be square");
  if (A.n() != X.cols())
    throw ValidationError("adjacency size " + std::to_string(A.n()) + " != feature columns " +
                          std::to_string(X.cols()));
}

// One layer of the covariance map: pre-activation covariance S -> (Lambda, Lambda_dot).
void layer_update(const ModelSpec& spec, const Mat& S, bool want_dot, Mat& lam, Mat& lam_dot) {
  const double w2 = spec.hp.sigma_w2, b2 = spec.hp.sigma_b2;
  const double b2_dot = spec.bias_in_derivative ? b2 : 0.0;
  Mat E = dual(spec, S, false);
  if (spec.arch == Arch::skip_gnn) {
    lam = 0.5 * w2 * (E + S);
  } else {
    lam = w2 * E;
  }
  lam.array() += b2;
  symmetrize(lam);
  if (!want_dot) return;
  Mat Ed = dual(spec, S, true);
  if (spec.arch == Arch::skip_gnn) {
    lam_dot = 0.5 * w2 * (Ed.array() + 1.0).matrix();
  } else {
    lam_dot = w2 * Ed;
  }
  lam_dot.array() += b2_dot;
  symmetrize(lam_dot);
}

KernelState run(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X, bool want_ntk) {
  spec.validate();
  const bool conj = spec.arch != Arch::fcn && !A.is_identity();
  if (spec.arch != Arch::fcn) check_shapes(A, X);
  auto apply = [&](const Mat& M) { return conj ? conjugate(A.matrix, M) : M; };

  Mat lam = base_kernel(X, spec.hp);
  KernelState st;
  Mat theta;
  if (want_ntk) theta = apply(lam);
  for (int l = 1; l < spec.depth; ++l) {
    Mat S = apply(lam);
    Mat next, dot;
    layer_update(spec, S, want_ntk, next, dot);
    if (want_ntk) {
      Mat inner = next + dot.cwiseProduct(theta);
      theta = apply(inner);
    }
    lam = std::move(next);
  }
  st.lambda = apply(lam);
  if (want_ntk) st.theta = std::move(theta);
  st.layer = spec.depth;
  return st;
}

}  // namespace

Mat compute_gp(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X) {
  return run(spec, A, X, false).lambda;
}

Mat compute_ntk(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X) {
  return run(spec, A, X, true).theta;
}

KernelState compute_kernels(const ModelSpec& spec, const AdjacencyOperator& A, const Mat& X) {
  return run(spec, A, X, true);
}

Mat nonrecursive_ntk(const ModelSpec& spec, const Mat& X) {
  if (spec.arch != Arch::fcn) throw ValidationError("nonrecursive_ntk is defined for fcn only");
  spec.validate();
  const int L = spec.depth;
  // lams[h] = Lambda^h for h = 0..L-1, dots[h] = Lambda_dot^h for h = 1..L-1.
  std::vector<Mat> lams{base_kernel(X, spec.hp)};
  std::vector<Mat> dots{Mat()};
  for (int h = 1; h < L; ++h) {
    Mat lam, dot;
    layer_update(spec, lams.back(), true, lam, dot);
    lams.push_back(std::move(lam));
    dots.push_back(std::move(dot));
  }
  const Eigen::Index n = X.cols();
  Mat theta = Mat::Zero(n, n);
  for (int h = 0; h < L; ++h) {
    Mat term = lams[h];
    for (int k = h + 1; k < L; ++k) term = term.cwiseProduct(dots[k]);
    theta += term;
  }
  symmetrize(theta);
  return theta;
}

Mat inductive_gram(const std::vector<GraphSample>& samples, const ModelSpec& spec, KernelKind kind) {
  if (samples.empty()) return Mat();
  const Eigen::Index d0 = samples.front().X.rows();
  std::vector<Eigen::Index> offset{0};
  for (const auto& s : samples) {
    if (s.X.rows() != d0) throw ValidationError("all samples must share feature dimension");
    if (s.A.n() != s.X.cols()) throw ValidationError("sample adjacency/feature size mismatch");
    offset.push_back(offset.back() + s.X.cols());
  }
  // Block-diagonal joint graph: its node-level recursion carries every (ii, ij, jj) block at once.
  const Eigen::Index total = offset.back();
  Mat X(d0, total);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    X.middleCols(offset[i], samples[i].X.cols()) = samples[i].X;
    const SpMat& Ai = samples[i].A.matrix;
    for (int k = 0; k < Ai.outerSize(); ++k)
      for (SpMat::InnerIterator it(Ai, k); it; ++it)
        t.emplace_back(offset[i] + it.row(), offset[i] + it.col(), it.value());
  }
  AdjacencyOperator joint;
  joint.mode = AdjMode::raw01;
  joint.matrix.resize(total, total);
  joint.matrix.setFromTriplets(t.begin(), t.end());
  ModelSpec s = spec;
  if (s.arch == Arch::fcn) {
    SpMat I(total, total);
    I.setIdentity();
    joint.matrix = I;
    joint.mode = AdjMode::identity;
  }
  KernelState st = run(s, joint, X, kind == KernelKind::ntk);
  const Mat& K = kind == KernelKind::ntk ? st.theta : st.lambda;
  const std::size_t N = samples.size();
  Mat G(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      G(i, j) = K.block(offset[i], offset[j], offset[i + 1] - offset[i], offset[j + 1] - offset[j]).sum();
  symmetrize(G);
  return G;
}

namespace {
constexpr char kMagic[8] = {'G', 'N', 'T', 'K', 'M', 'A', 'T', '1'};
static_assert(std::endian::native == std::endian::little, "kernel file IO assumes little-endian host");
}  // namespace

void write_kernel(const std::string& path, const Mat& K) {
  if (K.rows() != K.cols()) throw ValidationError("kernel must be square");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(K.rows());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  // Eigen is column-major; transpose to emit row-major.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = K;
  out.write(reinterpret_cast<const char*>(R.data()),
            static_cast<std::streamsize>(sizeof(double) * n * n));
  if (!out) throw IoError("short write to " + path);
}

Mat read_kernel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw FormatError(path + ": bad kernel magic");
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n > (1ull << 20)) throw FormatError(path + ": bad kernel size");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(n, n);
  in.read(reinterpret_cast<char*>(R.data()), static_cast<std::streamsize>(sizeof(double) * n * n));
  if (!in) throw FormatError(path + ": truncated kernel data");
  return Mat(R);
}

}  // namespace gnk
