#include "gnk/finite.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "gnk/gat.hpp"
#include "gnk/kernel.hpp"

namespace gnk {

const char* to_string(NetArch a) {
  switch (a) {
    case NetArch::fcn: return "fcn";
    case NetArch::gnn: return "gnn";
    case NetArch::skip_gnn: return "skip_gnn";
    case NetArch::gat: return "gat";
  }
  return "?";
}

NetArch parse_net_arch(const std::string& s) {
  if (s == "fcn") return NetArch::fcn;
  if (s == "gnn") return NetArch::gnn;
  if (s == "skip_gnn" || s == "skip") return NetArch::skip_gnn;
  if (s == "gat") return NetArch::gat;
  throw ValidationError("unknown network architecture '" + s + "'");
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "gd" || s == "sgd") return Optimizer::gd;
  if (s == "adam") return Optimizer::adam;
  throw ValidationError("unknown optimizer '" + s + "'");
}

Loss parse_loss(const std::string& s) {
  if (s == "mse") return Loss::mse;
  if (s == "cross_entropy" || s == "ce") return Loss::cross_entropy;
  throw ValidationError("unknown loss '" + s + "'");
}

Reduction parse_reduction(const std::string& s) {
  if (s == "sum") return Reduction::sum;
  if (s == "mean") return Reduction::mean;
  throw ValidationError("unknown loss reduction '" + s + "'");
}

std::size_t FiniteNet::num_params() const {
  std::size_t k = 0;
  for (const auto& p : params) k += static_cast<std::size_t>(p.value.size());
  return k;
}

int FiniteNet::find(int layer, ParamKind kind, int head, int which) const {
  int seen = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto& p = params[b];
    if (p.layer == layer && p.kind == kind && p.head == head) {
      if (seen == which) return static_cast<int>(b);
      ++seen;
    }
  }
  return -1;
}

FiniteNet init_network(const NetSpec& spec, const std::vector<int>& widths, int heads, std::uint64_t seed) {
  spec.hp.validate();
  if (widths.size() < 2) throw ValidationError("network needs at least one layer");
  for (int w : widths)
    if (w < 1) throw ValidationError("layer widths must be >= 1");
  const int L = static_cast<int>(widths.size()) - 1;
  if (spec.arch == NetArch::skip_gnn && L < 2) throw ValidationError("skip_gnn needs depth >= 2");
  if (spec.arch == NetArch::gat && heads < 1) throw ValidationError("heads must be >= 1");
  if (!spec.hp.normalize_input_by_d0) throw ValidationError("finite networks always scale the input by 1/sqrt(d0)");

  FiniteNet net;
  net.spec = spec;
  net.widths = widths;
  net.heads = spec.arch == NetArch::gat ? heads : 1;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  auto draw = [&](int r, int c) {
    Mat M(r, c);
    for (Eigen::Index k = 0; k < M.size(); ++k) M.data()[k] = N(rng);
    return M;
  };
  auto add = [&](std::string name, ParamKind kind, int layer, int head, Mat v) {
    net.params.push_back({std::move(name), kind, layer, head, std::move(v)});
  };

  for (int h = 1; h <= L; ++h) {
    const int out = widths[h];
    const std::string tag = std::to_string(h);
    if (spec.arch != NetArch::gat || h == 1) {
      int fan = widths[h - 1];
      if (spec.arch == NetArch::skip_gnn && h > 1) fan *= 2;
      add("W" + tag, ParamKind::weight, h, -1, draw(out, fan));
      if (spec.bias) add("b" + tag, ParamKind::bias, h, -1, draw(out, 1));
      continue;
    }
    const int d = widths[h - 1];
    for (int k = 0; k < heads; ++k) {
      const std::string ht = tag + "." + std::to_string(k);
      add("W" + ht, ParamKind::weight, h, k, draw(out, d));
      if (spec.bias) add("b" + ht, ParamKind::bias, h, k, draw(out, 1));
      add("c1." + ht, ParamKind::attention, h, k, draw(1, d));
      add("c2." + ht, ParamKind::attention, h, k, draw(1, d));
    }
  }
  return net;
}

namespace {

bool uses_graph(const FiniteNet& net) { return net.spec.arch != NetArch::fcn; }

Mat apply(const Activation& a, const Mat& M) {
  return M.unaryExpr([&](double x) { return a(x); });
}
Mat apply_derivative(const Activation& a, const Mat& M) {
  return M.unaryExpr([&](double x) { return a.derivative(x); });
}

// Next-layer input built from pre-activations F.
Mat layer_input(const FiniteNet& net, const Mat& F) {
  if (net.spec.arch != NetArch::skip_gnn) return apply(net.spec.act, F);
  Mat G(2 * F.rows(), F.cols());
  G.topRows(F.rows()) = apply(net.spec.act, F);
  G.bottomRows(F.rows()) = F;
  return G;
}

const Mat& block(const FiniteNet& net, int layer, ParamKind kind, int head = -1, int which = 0) {
  const int b = net.find(layer, kind, head, which);
  if (b < 0) throw ValidationError("missing parameter block");
  return net.params[b].value;
}

Mat dense_adjacency(const AdjacencyOperator& A, int n) {
  if (A.n() != n) throw ValidationError("adjacency size does not match features");
  return A.dense();
}

}  // namespace

Mat forward(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X, ForwardCache* cache) {
  const int L = net.depth();
  const int n = static_cast<int>(X.cols());
  if (X.rows() != net.widths[0]) throw ValidationError("feature dimension does not match the network");
  if (uses_graph(net) && A.n() != n) throw ValidationError("adjacency size does not match features");
  const auto& hp = net.spec.hp;
  const double sw = std::sqrt(hp.sigma_w2), sb = std::sqrt(hp.sigma_b2), sc = std::sqrt(hp.sigma_c2);

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.F.assign(L + 1, Mat());
  c.G.assign(L + 1, Mat());
  c.L.assign(L + 1, {});
  c.P.assign(L + 1, {});
  c.V.assign(L + 1, {});
  c.G[0] = X;

  Mat Ad;
  if (net.spec.arch == NetArch::gat) Ad = dense_adjacency(A, n);

  for (int h = 1; h <= L; ++h) {
    const Mat& G = c.G[h - 1];
    const double d = static_cast<double>(G.rows());
    if (net.spec.arch != NetArch::gat || h == 1) {
      Mat Z = (sw / std::sqrt(d)) * (block(net, h, ParamKind::weight) * G);
      if (net.spec.bias) Z.colwise() += sb * block(net, h, ParamKind::bias).col(0);
      if (net.spec.arch == NetArch::gat || !uses_graph(net))
        c.F[h] = std::move(Z);
      else
        c.F[h] = Z * A.matrix.transpose();
    } else {
      Mat F = Mat::Zero(net.widths[h], n);
      const double inv_heads = 1.0 / std::sqrt(static_cast<double>(net.heads));
      for (int k = 0; k < net.heads; ++k) {
        const Mat cs = block(net, h, ParamKind::attention, k, 0) + block(net, h, ParamKind::attention, k, 1);
        const Vec z = (sc / std::sqrt(2.0 * d)) * (cs * G).transpose();
        Mat Lk(n, n);
        for (int b = 0; b < n; ++b)
          for (int a = 0; a < n; ++a) Lk(a, b) = Ad(a, b) * (z(a) + z(b));
        Mat Pk = apply(net.spec.sigma1, Lk);
        Mat Vk = (sw / std::sqrt(d)) * (block(net, h, ParamKind::weight, k) * G);
        if (net.spec.bias) Vk.colwise() += sb * block(net, h, ParamKind::bias, k).col(0);
        F.noalias() += inv_heads * (Vk * Pk);
        c.L[h].push_back(std::move(Lk));
        c.P[h].push_back(std::move(Pk));
        c.V[h].push_back(std::move(Vk));
      }
      c.F[h] = std::move(F);
    }
    if (h < L) c.G[h] = net.spec.arch == NetArch::gat ? apply(net.spec.act, c.F[h]) : layer_input(net, c.F[h]);
  }
  return c.F[L];
}

void backward(const FiniteNet& net, const AdjacencyOperator& A, const ForwardCache& cache,
              const std::vector<Mat>& seeds, const std::function<void(const BlockFactor&)>& on_block) {
  const int L = net.depth();
  const int n = static_cast<int>(cache.G[0].cols());
  const auto& hp = net.spec.hp;
  const double sw = std::sqrt(hp.sigma_w2), sb = std::sqrt(hp.sigma_b2), sc = std::sqrt(hp.sigma_c2);
  const std::size_t R = seeds.size();
  const bool graph = uses_graph(net) && net.spec.arch != NetArch::gat;

  std::vector<Mat> D = seeds;
  const Mat ones_row = Mat::Ones(1, n);
  Mat bias_H = ones_row;
  if (graph) bias_H = (A.matrix * Vec::Ones(n)).transpose();
  Mat Ad;
  if (net.spec.arch == NetArch::gat) Ad = dense_adjacency(A, n);

  for (int h = L; h >= 1; --h) {
    const Mat& G = cache.G[h - 1];
    const double d = static_cast<double>(G.rows());
    std::vector<Mat> U(R, Mat::Zero(G.rows(), n));

    if (net.spec.arch != NetArch::gat || h == 1) {
      const double s = sw / std::sqrt(d);
      const Mat H = graph ? Mat(G * A.matrix.transpose()) : G;
      on_block({net.find(h, ParamKind::weight), s, &D, &H});
      if (net.spec.bias) {
        const Mat& Hb = (net.spec.arch == NetArch::gat) ? ones_row : bias_H;
        on_block({net.find(h, ParamKind::bias), sb, &D, &Hb});
      }
      if (h > 1) {
        const Mat& W = block(net, h, ParamKind::weight);
        for (std::size_t r = 0; r < R; ++r)
          U[r] = graph ? Mat(s * (W.transpose() * (D[r] * A.matrix))) : Mat(s * (W.transpose() * D[r]));
      }
    } else {
      const double inv_heads = 1.0 / std::sqrt(static_cast<double>(net.heads));
      const double s_w = sw / std::sqrt(d), s_c = sc / std::sqrt(2.0 * d);
      for (int k = 0; k < net.heads; ++k) {
        const Mat& P = cache.P[h][k];
        const Mat& V = cache.V[h][k];
        const Mat S1 = apply_derivative(net.spec.sigma1, cache.L[h][k]);
        std::vector<Mat> DV(R), g(R);
        for (std::size_t r = 0; r < R; ++r) {
          DV[r] = inv_heads * (D[r] * P.transpose());
          const Mat DL = (inv_heads * (V.transpose() * D[r])).cwiseProduct(S1).cwiseProduct(Ad);
          g[r] = (DL.rowwise().sum() + DL.colwise().sum().transpose()).transpose();
        }
        on_block({net.find(h, ParamKind::weight, k), s_w, &DV, &G});
        if (net.spec.bias) on_block({net.find(h, ParamKind::bias, k), sb, &DV, &ones_row});
        on_block({net.find(h, ParamKind::attention, k, 0), s_c, &g, &G});
        on_block({net.find(h, ParamKind::attention, k, 1), s_c, &g, &G});
        const Mat& W = block(net, h, ParamKind::weight, k);
        const Mat cs = block(net, h, ParamKind::attention, k, 0) + block(net, h, ParamKind::attention, k, 1);
        for (std::size_t r = 0; r < R; ++r) {
          U[r].noalias() += s_w * (W.transpose() * DV[r]);
          U[r].noalias() += s_c * (cs.transpose() * g[r]);
        }
      }
    }
    if (h == 1) break;
    const Mat S = apply_derivative(net.spec.act, cache.F[h - 1]);
    const Eigen::Index p = S.rows();
    for (std::size_t r = 0; r < R; ++r) {
      if (net.spec.arch == NetArch::skip_gnn)
        D[r] = S.cwiseProduct(U[r].topRows(p)) + U[r].bottomRows(p);
      else
        D[r] = S.cwiseProduct(U[r]);
    }
  }
}

namespace {

std::vector<Mat> unit_seeds(int dL, int n, const std::vector<int>& nodes) {
  std::vector<Mat> seeds;
  for (int j : nodes)
    for (int o = 0; o < dL; ++o) {
      Mat E = Mat::Zero(dL, n);
      E(o, j) = 1.0;
      seeds.push_back(std::move(E));
    }
  return seeds;
}

std::vector<int> all_nodes(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

std::vector<Mat> jacobian_blocks(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X) {
  const int n = static_cast<int>(X.cols()), dL = net.out_dim();
  const std::size_t rows = static_cast<std::size_t>(n) * dL;
  if (rows * net.num_params() > (std::size_t{1} << 27))
    throw CapacityError("explicit Jacobian too large; use empirical_ntk");
  ForwardCache cache;
  forward(net, A, X, &cache);
  const auto seeds = unit_seeds(dL, n, all_nodes(n));
  std::vector<Mat> J(net.params.size());
  backward(net, A, cache, seeds, [&](const BlockFactor& f) {
    const Mat& P = net.params[f.block].value;
    Mat Jb(static_cast<Eigen::Index>(rows), P.size());
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      const Mat g = f.s * ((*f.D)[r] * f.H->transpose());
      Jb.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Vec>(g.data(), g.size()).transpose();
    }
    J[f.block] = std::move(Jb);
  });
  return J;
}

Mat finite_difference_block(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X, int block_index,
                            double step) {
  if (block_index < 0 || block_index >= static_cast<int>(net.params.size()))
    throw ValidationError("block index out of range");
  FiniteNet probe = net;
  Mat& P = probe.params[block_index].value;
  const Eigen::Index rows = X.cols() * net.out_dim();
  Mat J(rows, P.size());
  for (Eigen::Index k = 0; k < P.size(); ++k) {
    const double v = P.data()[k];
    P.data()[k] = v + step;
    const Mat up = forward(probe, A, X);
    P.data()[k] = v - step;
    const Mat dn = forward(probe, A, X);
    P.data()[k] = v;
    const Mat diff = (up - dn) / (2.0 * step);
    J.col(k) = Eigen::Map<const Vec>(diff.data(), diff.size());
  }
  return J;
}

Mat empirical_ntk(const FiniteNet& net, const AdjacencyOperator& A, const Mat& X, const std::vector<int>& nodes) {
  const int n = static_cast<int>(X.cols()), dL = net.out_dim();
  const std::vector<int> sel = nodes.empty() ? all_nodes(n) : nodes;
  for (int j : sel)
    if (j < 0 || j >= n) throw ValidationError("node index out of range");
  const std::size_t R = sel.size() * static_cast<std::size_t>(dL);
  if (R * R > kNtkCapacity) throw CapacityError("empirical NTK exceeds capacity");
  ForwardCache cache;
  forward(net, A, X, &cache);
  const auto seeds = unit_seeds(dL, n, sel);
  Mat K = Mat::Zero(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
  backward(net, A, cache, seeds, [&](const BlockFactor& f) {
    // <D_r H^T, D_r' H^T> = <D_r (H^T H), D_r'>
    const Mat HtH = f.H->transpose() * *f.H;
    const Eigen::Index p = (*f.D)[0].rows();
    Mat Dm(p * n, static_cast<Eigen::Index>(R)), Mm(p * n, static_cast<Eigen::Index>(R));
    for (std::size_t r = 0; r < R; ++r) {
      const Mat& Dr = (*f.D)[r];
      const Mat M = Dr * HtH;
      Dm.col(static_cast<Eigen::Index>(r)) = Eigen::Map<const Vec>(Dr.data(), Dr.size());
      Mm.col(static_cast<Eigen::Index>(r)) = Eigen::Map<const Vec>(M.data(), M.size());
    }
    K.noalias() += (f.s * f.s) * (Mm.transpose() * Dm);
  });
  symmetrize(K);
  return K;
}

double loss_value(const Mat& F, const Mat& Y, const std::vector<int>& train, Loss loss, Reduction red) {
  if (train.empty()) throw ValidationError("train set is empty");
  double total = 0.0;
  for (int j : train) {
    if (loss == Loss::mse) {
      total += 0.5 * (F.col(j) - Y.col(j)).squaredNorm();
    } else {
      const double m = F.col(j).maxCoeff();
      const double lse = m + std::log((F.col(j).array() - m).exp().sum());
      total += lse - F.col(j).dot(Y.col(j));
    }
  }
  return red == Reduction::mean ? total / static_cast<double>(train.size()) : total;
}

Mat loss_gradient(const Mat& F, const Mat& Y, const std::vector<int>& train, Loss loss, Reduction red) {
  if (train.empty()) throw ValidationError("train set is empty");
  Mat g = Mat::Zero(F.rows(), F.cols());
  const double w = red == Reduction::mean ? 1.0 / static_cast<double>(train.size()) : 1.0;
  for (int j : train) {
    if (loss == Loss::mse) {
      g.col(j) = w * (F.col(j) - Y.col(j));
    } else {
      const double m = F.col(j).maxCoeff();
      Vec e = (F.col(j).array() - m).exp();
      e /= e.sum();
      g.col(j) = w * (e - Y.col(j));
    }
  }
  return g;
}

void TrainingTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "epoch,loss,accuracy,weight_drift,ntk_drift\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.loss << ',' << r.accuracy << ',' << r.weight_drift << ',' << r.ntk_drift << '\n';
}

TrainingTrace train(FiniteNet& net, const AdjacencyOperator& A, const Mat& X, const Mat& Y,
                    const std::vector<int>& train_nodes, const TrainConfig& cfg, const std::vector<int>& labels) {
  if (!(cfg.lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (cfg.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (Y.rows() != net.out_dim() || Y.cols() != X.cols()) throw ValidationError("targets must be d_L x n");
  if (train_nodes.empty()) throw ValidationError("train set is empty");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const std::vector<Mat> theta0 = [&] {
    std::vector<Mat> v;
    for (const auto& p : net.params) v.push_back(p.value);
    return v;
  }();
  // weight drift sums Frobenius norms over weight matrices only
  double norm0 = 0.0;
  for (std::size_t b = 0; b < theta0.size(); ++b)
    if (net.params[b].kind == ParamKind::weight) norm0 += theta0[b].norm();

  const Mat F0 = cfg.center_output ? forward(net, A, X) : Mat::Zero(net.out_dim(), X.cols());
  Mat ntk0;
  const bool track = cfg.track_ntk_every > 0;
  if (track) ntk0 = empirical_ntk(net, A, X, train_nodes);

  std::vector<Mat> m1, m2;
  if (cfg.optimizer == Optimizer::adam)
    for (const auto& p : net.params) {
      m1.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
      m2.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    }

  TrainingTrace trace;
  for (int e = 0; e <= cfg.epochs; ++e) {
    ForwardCache cache;
    const Mat F = forward(net, A, X, &cache) - F0;
    TraceRow row;
    row.epoch = e;
    row.loss = loss_value(F, Y, train_nodes, cfg.loss, cfg.reduction);
    row.accuracy = nan;
    if (!labels.empty()) {
      std::size_t hit = 0;
      for (int j : train_nodes) {
        Eigen::Index best;
        F.col(j).maxCoeff(&best);
        hit += static_cast<int>(best) == labels[j];
      }
      row.accuracy = static_cast<double>(hit) / static_cast<double>(train_nodes.size());
    }
    double drift = 0.0;
    for (std::size_t b = 0; b < theta0.size(); ++b)
      if (net.params[b].kind == ParamKind::weight) drift += (net.params[b].value - theta0[b]).norm();
    row.weight_drift = norm0 > 0.0 ? drift / norm0 : 0.0;
    row.ntk_drift = nan;
    if (track && (e % cfg.track_ntk_every == 0 || e == cfg.epochs))
      row.ntk_drift = e == 0 ? 0.0 : rel_frobenius(empirical_ntk(net, A, X, train_nodes), ntk0);
    trace.rows.push_back(row);
    if (!std::isfinite(row.loss))
      throw DivergedTraining("training diverged at epoch " + std::to_string(e), e, trace);
    if (e == cfg.epochs) break;

    const Mat g = loss_gradient(F, Y, train_nodes, cfg.loss, cfg.reduction);
    std::vector<Mat> grads(net.params.size());
    backward(net, A, cache, {g}, [&](const BlockFactor& f) { grads[f.block] = f.s * ((*f.D)[0] * f.H->transpose()); });
    for (std::size_t b = 0; b < grads.size(); ++b) {
      if (cfg.optimizer == Optimizer::gd) {
        net.params[b].value -= cfg.lr * grads[b];
        continue;
      }
      m1[b] = cfg.beta1 * m1[b] + (1.0 - cfg.beta1) * grads[b];
      m2[b] = cfg.beta2 * m2[b] + (1.0 - cfg.beta2) * grads[b].cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, e + 1), c2 = 1.0 - std::pow(cfg.beta2, e + 1);
      net.params[b].value.array() -=
          cfg.lr * (m1[b].array() / c1) / ((m2[b].array() / c2).sqrt() + cfg.adam_eps);
    }
  }
  return trace;
}

TrainingTrace train(FiniteNet& net, const NodeDataset& data, const SplitMask& mask, AdjMode mode,
                    const TrainConfig& cfg) {
  validate_split(mask, data);
  const auto tr = mask.indices(Split::train);
  const AdjacencyOperator A = build_adjacency(data.graph, mode);
  const Mat Y = encode_targets(data).transpose();
  if (Y.rows() != net.out_dim()) throw ValidationError("network output width does not match the targets");
  std::vector<int> labels;
  if (data.task == Task::classification) {
    labels.resize(data.n(), -1);
    for (int i = 0; i < data.n(); ++i)
      if (data.labeled(i)) labels[i] = static_cast<int>(data.labels(i));
  }
  return train(net, A, data.features, Y, tr, cfg, labels);
}

namespace {

ModelSpec model_spec(const NetSpec& spec, int depth) {
  ModelSpec m;
  switch (spec.arch) {
    case NetArch::fcn: m.arch = Arch::fcn; break;
    case NetArch::gnn: m.arch = Arch::gnn; break;
    case NetArch::skip_gnn: m.arch = Arch::skip_gnn; break;
    default: throw ValidationError("not a message-passing architecture");
  }
  m.depth = depth;
  m.hp = spec.hp;
  if (!spec.bias) m.hp.sigma_b2 = 0.0;
  m.act = spec.act;
  // The Jacobian Gram of the finite network has no bias term in the derivative kernel.
  m.bias_in_derivative = false;
  return m;
}

GatSpec gat_spec(const NetSpec& spec, int depth) {
  GatSpec g;
  g.depth = depth;
  g.hp = spec.hp;
  g.sigma1 = spec.sigma1;
  g.sigma2 = spec.act;
  g.bias = spec.bias;
  return g;
}

}  // namespace

Mat closed_form_ntk(const NetSpec& spec, int depth, const AdjacencyOperator& A, const Mat& X) {
  if (spec.arch == NetArch::gat) return gat_ntk(gat_spec(spec, depth), A, X);
  return compute_ntk(model_spec(spec, depth), A, X);
}

Mat closed_form_gp(const NetSpec& spec, int depth, const AdjacencyOperator& A, const Mat& X) {
  if (spec.arch == NetArch::gat) return gat_gp(gat_spec(spec, depth), A, X);
  return compute_gp(model_spec(spec, depth), A, X);
}

KernelNetworkReport kernel_vs_network_prediction(const NetSpec& spec, const std::vector<int>& widths,
                                                 const AdjacencyOperator& A, const Mat& X, const Mat& Y,
                                                 const std::vector<int>& train_nodes,
                                                 const std::vector<int>& test_nodes, double lr, int epochs,
                                                 std::uint64_t seed, int heads) {
  if (test_nodes.empty()) throw ValidationError("test set is empty");
  FiniteNet net = init_network(spec, widths, heads, seed);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::gd;
  cfg.loss = Loss::mse;
  cfg.lr = lr;
  cfg.epochs = epochs;
  cfg.track_ntk_every = 0;
  cfg.center_output = true;
  const Mat F0 = forward(net, A, X);
  const TrainingTrace trace = train(net, A, X, Y, train_nodes, cfg);
  const Mat F = forward(net, A, X) - F0;

  const Mat Theta = closed_form_ntk(spec, net.depth(), A, X);
  const Prediction p = krr_solve(Theta, Y.transpose(), train_nodes, 0.0, false);

  KernelNetworkReport rep;
  const Eigen::Index m = static_cast<Eigen::Index>(test_nodes.size());
  rep.network.resize(Y.rows(), m);
  rep.kernel.resize(Y.rows(), m);
  for (Eigen::Index t = 0; t < m; ++t) {
    rep.network.col(t) = F.col(test_nodes[t]);
    rep.kernel.col(t) = p.values.row(test_nodes[t]).transpose();
  }
  rep.max_deviation = (rep.network - rep.kernel).cwiseAbs().maxCoeff();
  rep.final_loss = trace.rows.back().loss;
  return rep;
}

}  // namespace gnk
