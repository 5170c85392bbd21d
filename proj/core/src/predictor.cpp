#include "gnk/predictor.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gnk/errors.hpp"

namespace gnk {

const char* to_string(Metric m) { return m == Metric::accuracy ? "accuracy" : "r2"; }

Metric parse_metric(const std::string& s) {
  if (s == "accuracy" || s == "acc") return Metric::accuracy;
  if (s == "r2") return Metric::r2;
  throw ValidationError("unknown metric '" + s + "'");
}

Metric default_metric(Task t) { return t == Task::classification ? Metric::accuracy : Metric::r2; }

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ValidationError("invalid log grid");
  std::vector<double> g;
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < count; ++k) g.push_back(std::pow(10.0, a + (b - a) * k / (count - 1)));
  return g;
}

void FitConfig::validate() const {
  if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] > 0.0)) throw ValidationError("lambda grid values must be > 0");
    if (k && !(lambda_grid[k] > lambda_grid[k - 1])) throw ValidationError("lambda grid must be increasing");
  }
}

Mat encode_targets(const NodeDataset& data) {
  const int n = data.n();
  if (data.task == Task::regression) {
    Mat Y(n, 1);
    for (int i = 0; i < n; ++i) Y(i, 0) = data.labeled(i) ? data.labels(i) : 0.0;
    return Y;
  }
  Mat Y = Mat::Zero(n, data.num_classes);
  for (int i = 0; i < n; ++i)
    if (data.labeled(i)) Y(i, static_cast<int>(data.labels(i))) = 1.0;
  return Y;
}

Prediction krr_solve(const Mat& K, const Mat& Y, const std::vector<int>& train, double lambda,
                     bool classification, const KrrOptions& opt) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || Y.rows() != n) throw ValidationError("kernel/target size mismatch");
  if (train.empty()) throw ValidationError("train set is empty");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  const Eigen::Index m = static_cast<Eigen::Index>(train.size());
  Mat Ktt(m, m), Kat(n, m), Yt(m, Y.cols());
  for (Eigen::Index b = 0; b < m; ++b) {
    Kat.col(b) = K.col(train[b]);
    Yt.row(b) = Y.row(train[b]);
    for (Eigen::Index a = 0; a < m; ++a) Ktt(a, b) = K(train[a], train[b]);
  }
  Ktt.diagonal().array() += lambda;
  const auto chol = cholesky_with_jitter(Ktt, opt.jitter, opt.max_jitter);
  Prediction p;
  p.values = Kat * chol.llt.solve(Yt);
  if (classification) {
    p.hard_labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (Eigen::Index c = 1; c < p.values.cols(); ++c)
        if (p.values(i, c) > p.values(i, best)) best = static_cast<int>(c);
      p.hard_labels[i] = best;
    }
  }
  if (opt.with_variance) {
    Mat S = chol.llt.matrixL().solve(Kat.transpose());  // m x n
    p.variance = K.diagonal() - S.colwise().squaredNorm().transpose();
  }
  return p;
}

Prediction krr_predict(const Mat& K, const NodeDataset& data, const SplitMask& mask, double lambda,
                       const KrrOptions& opt) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
  if (K.rows() != data.n()) throw ValidationError("kernel size does not match dataset");
  validate_split(mask, data);
  return krr_solve(K, encode_targets(data), mask.indices(Split::train), lambda,
                   data.task == Task::classification, opt);
}

double evaluate(const Prediction& pred, const NodeDataset& data, const std::vector<int>& nodes, Metric metric) {
  if (nodes.empty()) throw ValidationError("evaluation mask is empty");
  for (int i : nodes)
    if (!data.labeled(i)) throw ValidationError("evaluation node " + std::to_string(i) + " has no label");
  if (metric == Metric::accuracy) {
    if (pred.hard_labels.empty()) throw ValidationError("accuracy needs hard labels");
    std::size_t hit = 0;
    for (int i : nodes) hit += pred.hard_labels[i] == static_cast<int>(data.labels(i));
    return static_cast<double>(hit) / static_cast<double>(nodes.size());
  }
  double mean = 0.0;
  for (int i : nodes) mean += data.labels(i);
  mean /= static_cast<double>(nodes.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (int i : nodes) {
    const double r = data.labels(i) - pred.values(i, 0);
    const double d = data.labels(i) - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) {
    if (ss_res == 0.0) return 1.0;
    throw DegenerateError("R^2 undefined: targets on the mask are constant");
  }
  return 1.0 - ss_res / ss_tot;
}

namespace {
double score_or_sentinel(const Prediction& p, const NodeDataset& d, const std::vector<int>& nodes, Metric m) {
  try {
    return evaluate(p, d, nodes, m);
  } catch (const DegenerateError&) {
    return -std::numeric_limits<double>::infinity();
  }
}
}  // namespace

GridResult grid_search(const Mat& K, const NodeDataset& data, const SplitMask& mask, const FitConfig& cfg) {
  cfg.validate();
  const auto val = mask.indices(Split::val);
  if (val.empty()) throw ValidationError("validation split is empty");
  const auto test = mask.indices(Split::test);
  KrrOptions opt;
  opt.jitter = cfg.jitter;
  opt.max_jitter = cfg.max_jitter;
  GridResult r;
  r.val_score = -std::numeric_limits<double>::infinity();
  for (double lam : cfg.lambda_grid) {
    const Prediction p = krr_predict(K, data, mask, lam, opt);
    const double s = score_or_sentinel(p, data, val, cfg.metric);
    r.val_scores.push_back(s);
    if (s > r.val_score || r.val_scores.size() == 1) {
      r.val_score = s;
      r.best_lambda = lam;
    }
  }
  if (test.empty()) {
    r.test_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    const Prediction p = krr_predict(K, data, mask, r.best_lambda, opt);
    r.test_score = score_or_sentinel(p, data, test, cfg.metric);
  }
  return r;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "'");
  }
}

constexpr const char* kHeader = "model,dataset,lambda,val_score,test_score,metric,timestamp";

}  // namespace

void append_result_csv(const std::string& path, const ResultRow& row) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write " + path);
  if (fresh) out << kHeader << '\n';
  out << row.model << ',' << row.dataset << ',' << fmt(row.lambda) << ',' << fmt(row.val_score) << ','
      << fmt(row.test_score) << ',' << row.metric << ',' << row.timestamp << '\n';
}

std::vector<ResultRow> read_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ResultRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) c.push_back(tok);
    if (!line.empty() && line.back() == ',') c.emplace_back();
    if (header) {
      header = false;
      if (c.size() >= 5 && c[0] == "model") continue;
    }
    if (c.size() < 5) throw FormatError(path + ": expected at least 5 columns");
    ResultRow r;
    r.model = c[0];
    r.dataset = c[1];
    r.lambda = parse(c[2]);
    r.val_score = parse(c[3]);
    r.test_score = parse(c[4]);
    if (c.size() > 5) r.metric = c[5];
    if (c.size() > 6) r.timestamp = c[6];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gnk
