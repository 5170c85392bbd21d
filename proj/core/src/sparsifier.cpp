#include "gnk/sparsifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "gnk/errors.hpp"

namespace gnk {

Mat laplacian_pinv_dense(const Graph& g) {
  Mat L = Mat(build_adjacency(g, AdjMode::laplacian).matrix);
  Eigen::SelfAdjointEigenSolver<Mat> es(L);
  const Vec& ev = es.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Vec inv = ev.unaryExpr([&](double x) { return std::abs(x) > tol ? 1.0 / x : 0.0; });
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

ResistanceTable exact_resistances(const Graph& g) {
  const auto comp = g.components();
  const int nc = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<std::vector<int>> members(nc);
  std::vector<int> local(g.n);
  for (int i = 0; i < g.n; ++i) {
    local[i] = static_cast<int>(members[comp[i]].size());
    members[comp[i]].push_back(i);
  }
  std::vector<std::vector<std::size_t>> comp_edges(nc);
  for (std::size_t k = 0; k < g.edges.size(); ++k) comp_edges[comp[g.edges[k].first]].push_back(k);

  ResistanceTable out;
  out.R.assign(g.edges.size(), 0.0);
  for (int c = 0; c < nc; ++c) {
    if (comp_edges[c].empty()) continue;
    const int s = static_cast<int>(members[c].size());
    // L^+ = (L + J/s)^{-1} - J/s on a connected component.
    Mat M = Mat::Constant(s, s, 1.0 / s);
    for (std::size_t k : comp_edges[c]) {
      const int u = local[g.edges[k].first], v = local[g.edges[k].second];
      const double w = g.weights[k];
      M(u, u) += w;
      M(v, v) += w;
      M(u, v) -= w;
      M(v, u) -= w;
    }
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("Laplacian factorization failed");
    Mat P = llt.solve(Mat::Identity(s, s));
    for (std::size_t k : comp_edges[c]) {
      const int u = local[g.edges[k].first], v = local[g.edges[k].second];
      out.R[k] = P(u, u) + P(v, v) - 2.0 * P(u, v);
    }
  }
  return out;
}

// Jacobi-preconditioned CG on L x = b with b orthogonal to each component's ones vector.
Vec pcg(const SpMat& L, const Vec& diag, const Vec& b, const std::vector<int>& comp, int nc, double tol,
        int max_iter) {
  auto project = [&](Vec& v) {
    Vec sum = Vec::Zero(nc), cnt = Vec::Zero(nc);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      sum(comp[i]) += v(i);
      cnt(comp[i]) += 1.0;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) -= sum(comp[i]) / cnt(comp[i]);
  };
  Vec x = Vec::Zero(b.size());
  Vec r = b;
  project(r);
  const double bnorm = r.norm();
  if (bnorm == 0.0) return x;
  Vec z = r.cwiseQuotient(diag);
  Vec p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    Vec Ap = L * p;
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= tol * bnorm) break;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  project(x);
  return x;
}

ResistanceTable sketched_resistances(const Graph& g, const ResistanceOptions& opt) {
  const int n = g.n;
  const std::size_t m = g.edges.size();
  const int k = static_cast<int>(std::ceil(opt.sketch_const * std::log(std::max(n, 2)) / (opt.eps * opt.eps)));
  const SpMat L = build_adjacency(g, AdjMode::laplacian).matrix;
  Vec diag = L.diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag(i) <= 0.0) diag(i) = 1.0;
  const auto comp = g.components();
  const int nc = *std::max_element(comp.begin(), comp.end()) + 1;

  std::mt19937_64 rng(opt.seed);
  std::bernoulli_distribution coin(0.5);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  Mat Z(k, n);
  for (int r = 0; r < k; ++r) {
    // y = (Q W^{1/2} B)_r, a +-1/sqrt(k) combination of weighted incidence rows.
    Vec y = Vec::Zero(n);
    for (std::size_t e = 0; e < m; ++e) {
      const double q = (coin(rng) ? scale : -scale) * std::sqrt(g.weights[e]);
      y(g.edges[e].first) += q;
      y(g.edges[e].second) -= q;
    }
    Z.row(r) = pcg(L, diag, y, comp, nc, opt.cg_tol, opt.cg_max_iter).transpose();
  }
  ResistanceTable out;
  out.exact = false;
  out.R.resize(m);
  for (std::size_t e = 0; e < m; ++e)
    out.R[e] = (Z.col(g.edges[e].first) - Z.col(g.edges[e].second)).squaredNorm();
  return out;
}

// Inclusion probabilities pi_e = min(1, c p_e) with sum pi = k.
std::vector<double> inclusion_probabilities(const std::vector<double>& p, std::size_t k) {
  const std::size_t m = p.size();
  std::vector<double> pi(m, 0.0);
  if (k >= m) {
    std::fill(pi.begin(), pi.end(), 1.0);
    return pi;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double rest = std::accumulate(p.begin(), p.end(), 0.0);
  std::size_t capped = 0;
  while (capped < k) {
    const double c = static_cast<double>(k - capped) / rest;
    if (c * p[order[capped]] < 1.0) {
      for (std::size_t j = capped; j < m; ++j) pi[order[j]] = c * p[order[j]];
      break;
    }
    pi[order[capped]] = 1.0;
    rest -= p[order[capped]];
    ++capped;
  }
  return pi;
}

}  // namespace

ResistanceTable effective_resistances(const Graph& g, const ResistanceOptions& opt) {
  if (g.n <= 0) throw ValidationError("graph is empty");
  if (g.n <= opt.exact_limit) return exact_resistances(g);
  return sketched_resistances(g, opt);
}

SparsifyResult sparsify(const Graph& g, const ResistanceTable& R, double keep_fraction, std::uint64_t seed,
                        bool binarize) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ValidationError("keep fraction must lie in (0, 1]");
  const std::size_t m = g.edges.size();
  if (R.R.size() != m) throw ValidationError("resistance table does not match graph");
  if (keep_fraction * static_cast<double>(m) < 1.0) throw ValidationError("keep fraction selects no edge");
  const std::size_t k = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(m) - 1e-9));

  std::vector<double> p(m);
  for (std::size_t e = 0; e < m; ++e) p[e] = g.weights[e] * std::max(R.R[e], 1e-300);

  // Exponential keys log(u)/p_e: the top-k set is a weighted sample without replacement,
  // and it is nested in k for a fixed seed.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> key(m);
  for (std::size_t e = 0; e < m; ++e) {
    double u = U(rng);
    while (u <= 0.0) u = U(rng);
    key[e] = std::log(u) / p[e];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(kept.begin(), kept.end());

  const auto pi = inclusion_probabilities(p, k);
  SparsifyResult out;
  out.kept = kept;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> w;
  for (std::size_t e : kept) {
    edges.push_back(g.edges[e]);
    out.inclusion.push_back(pi[e]);
    w.push_back(binarize ? 1.0 : g.weights[e] / pi[e]);
  }
  out.graph = Graph::from_edges(g.n, edges, w);
  return out;
}

SparsifyResult sparsify(const Graph& g, double keep_fraction, std::uint64_t seed, bool binarize,
                        const ResistanceOptions& opt) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ValidationError("keep fraction must lie in (0, 1]");
  return sparsify(g, effective_resistances(g, opt), keep_fraction, seed, binarize);
}

void write_resistances_tsv(const std::string& path, const Graph& g, const ResistanceTable& R) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[64];
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto res = std::to_chars(buf, buf + sizeof buf, R.R[e]);
    out << g.edges[e].first << '\t' << g.edges[e].second << '\t' << std::string(buf, res.ptr) << '\n';
  }
}

}  // namespace gnk
