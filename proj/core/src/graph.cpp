#include "gnk/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gnk/errors.hpp"

namespace fs = std::filesystem;

namespace gnk {

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& pairs,
                        const std::vector<double>& weights) {
  if (n < 0) throw ValidationError("negative node count");
  if (!weights.empty() && weights.size() != pairs.size())
    throw ValidationError("weights length does not match edge count");
  Graph g;
  g.n = n;
  std::map<std::pair<int, int>, std::size_t> seen;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto [u, v] = pairs[k];
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw FormatError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                        ") out of range for n=" + std::to_string(n));
    if (u == v) throw FormatError("self-loop on node " + std::to_string(u));
    if (u > v) std::swap(u, v);
    const double w = weights.empty() ? 1.0 : weights[k];
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("edge weight must be positive");
    if (seen.emplace(std::make_pair(u, v), g.edges.size()).second) {
      g.edges.emplace_back(u, v);
      g.weights.push_back(w);
    }
  }
  return g;
}

std::vector<double> Graph::degrees() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    d[edges[k].first] += weights[k];
    d[edges[k].second] += weights[k];
  }
  return d;
}

SpMat Graph::adjacency() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    t.emplace_back(edges[k].first, edges[k].second, weights[k]);
    t.emplace_back(edges[k].second, edges[k].first, weights[k]);
  }
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

std::vector<int> Graph::components() const {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (auto [u, v] : edges) {
    int a = find(u), b = find(v);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> id(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (id[r] < 0) id[r] = next++;
    id[i] = id[r];
  }
  return id;
}

int Graph::num_components() const {
  auto c = components();
  return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
}

const char* to_string(AdjMode m) {
  switch (m) {
    case AdjMode::identity: return "identity";
    case AdjMode::raw01: return "raw01";
    case AdjMode::self_loops: return "self-loops";
    case AdjMode::laplacian: return "laplacian";
    case AdjMode::kipf: return "kipf";
  }
  return "?";
}

AdjMode parse_adj_mode(const std::string& s) {
  if (s == "identity") return AdjMode::identity;
  if (s == "raw01" || s == "0-1") return AdjMode::raw01;
  if (s == "self-loops" || s == "self_loops" || s == "selfloops") return AdjMode::self_loops;
  if (s == "laplacian") return AdjMode::laplacian;
  if (s == "kipf") return AdjMode::kipf;
  throw ValidationError("unknown adjacency mode '" + s + "'");
}

AdjacencyOperator build_adjacency(const Graph& g, AdjMode mode) {
  AdjacencyOperator op;
  op.mode = mode;
  const int n = g.n;
  std::vector<Eigen::Triplet<double>> t;
  const auto deg = g.degrees();
  switch (mode) {
    case AdjMode::identity: {
      SpMat I(n, n);
      I.setIdentity();
      op.matrix = I;
      return op;
    }
    case AdjMode::raw01:
      op.matrix = g.adjacency();
      return op;
    case AdjMode::self_loops:
      for (std::size_t k = 0; k < g.edges.size(); ++k) {
        t.emplace_back(g.edges[k].first, g.edges[k].second, g.weights[k]);
        t.emplace_back(g.edges[k].second, g.edges[k].first, g.weights[k]);
      }
      for (int i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
      break;
    case AdjMode::laplacian:
      for (std::size_t k = 0; k < g.edges.size(); ++k) {
        t.emplace_back(g.edges[k].first, g.edges[k].second, -g.weights[k]);
        t.emplace_back(g.edges[k].second, g.edges[k].first, -g.weights[k]);
      }
      for (int i = 0; i < n; ++i) t.emplace_back(i, i, deg[i]);
      break;
    case AdjMode::kipf: {
      std::vector<double> s(n);
      for (int i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(deg[i] + 1.0);
      for (std::size_t k = 0; k < g.edges.size(); ++k) {
        auto [u, v] = g.edges[k];
        const double w = g.weights[k] * s[u] * s[v];
        t.emplace_back(u, v, w);
        t.emplace_back(v, u, w);
      }
      for (int i = 0; i < n; ++i) t.emplace_back(i, i, s[i] * s[i]);
      break;
    }
  }
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(t.begin(), t.end());
  return op;
}

AdjacencyOperator adjacency_from_dense(const Mat& A) {
  if (A.rows() != A.cols()) throw ValidationError("adjacency must be square");
  AdjacencyOperator op;
  op.mode = AdjMode::raw01;
  op.matrix = A.sparseView();
  return op;
}

const char* to_string(Task t) {
  return t == Task::classification ? "classification" : "regression";
}

bool NodeDataset::labeled(int i) const {
  const double y = labels(i);
  if (task == Task::classification) return y >= 0.0;
  return !std::isnan(y);
}

const char* to_string(Split s) {
  switch (s) {
    case Split::none: return "none";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "none") return Split::none;
  throw FormatError("unknown split tag '" + s + "'");
}

std::vector<int> SplitMask::indices(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == s) out.push_back(static_cast<int>(i));
  return out;
}

std::size_t SplitMask::count(Split s) const {
  return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), s));
}

void HyperParams::validate() const {
  if (!(sigma_w2 > 0.0)) throw ValidationError("sigma_w2 must be > 0");
  if (sigma_b2 < 0.0) throw ValidationError("sigma_b2 must be >= 0");
  if (sigma_c2 < 0.0) throw ValidationError("sigma_c2 must be >= 0");
}

void validate_split(const SplitMask& mask, const NodeDataset& data) {
  if (static_cast<int>(mask.assignment.size()) != data.n())
    throw ValidationError("split length " + std::to_string(mask.assignment.size()) +
                          " does not match n=" + std::to_string(data.n()));
  if (mask.count(Split::train) == 0) throw ValidationError("train split is empty");
  for (std::size_t i = 0; i < mask.assignment.size(); ++i) {
    const Split s = mask.assignment[i];
    if ((s == Split::train || s == Split::val) && !data.labeled(static_cast<int>(i)))
      throw ValidationError("node " + std::to_string(i) + " is in " + to_string(s) +
                            " but has no label");
  }
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

double parse_double(std::string_view tok, const std::string& where) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r' || tok.back() == '\t'))
    tok.remove_suffix(1);
  if (tok == "nan" || tok == "NaN" || tok == "NAN") return NAN;
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError("bad number '" + std::string(tok) + "' in " + where);
  return v;
}

long parse_int(std::string_view tok, const std::string& where) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError("bad integer '" + std::string(tok) + "' in " + where);
  return v;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Graph read_edges_tsv(const std::string& path, int n) {
  auto in = open_in(path);
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> w;
  bool any_weight = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string_view> cols;
    std::string_view sv(line);
    while (!sv.empty()) {
      auto p = sv.find_first_of("\t ");
      cols.push_back(sv.substr(0, p));
      if (p == std::string_view::npos) break;
      sv.remove_prefix(p + 1);
      while (!sv.empty() && (sv.front() == '\t' || sv.front() == ' ')) sv.remove_prefix(1);
    }
    const std::string where = path + ":" + std::to_string(lineno);
    if (cols.size() < 2 || cols.size() > 3) throw FormatError("expected 2 or 3 columns at " + where);
    const long u = parse_int(cols[0], where), v = parse_int(cols[1], where);
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw FormatError("node index out of range at " + where + " (n=" + std::to_string(n) + ")");
    pairs.emplace_back(static_cast<int>(u), static_cast<int>(v));
    if (cols.size() == 3) {
      any_weight = true;
      w.push_back(parse_double(cols[2], where));
    } else {
      w.push_back(1.0);
    }
  }
  // Self-loops in third-party edge lists are dropped; normalization modes add their own.
  std::vector<std::pair<int, int>> kept;
  std::vector<double> kw;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].first == pairs[k].second) continue;
    kept.push_back(pairs[k]);
    kw.push_back(w[k]);
  }
  return Graph::from_edges(n, kept, any_weight ? kw : std::vector<double>{});
}

void write_edges_tsv(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const bool weighted =
      std::any_of(g.weights.begin(), g.weights.end(), [](double w) { return w != 1.0; });
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    out << g.edges[k].first << '\t' << g.edges[k].second;
    if (weighted) out << '\t' << fmt_double(g.weights[k]);
    out << '\n';
  }
}

Bundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  for (const char* f : {"meta.json", "edges.tsv", "features.csv", "labels.csv", "split.csv"})
    if (!fs::exists(root / f)) throw IoError("missing " + (root / f).string());

  nlohmann::json meta;
  try {
    auto in = open_in(root / "meta.json");
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  Bundle b;
  NodeDataset& ds = b.data;
  int n = 0, d = 0;
  std::string task;
  try {
    ds.name = meta.value("name", root.filename().string());
    n = meta.at("n").get<int>();
    d = meta.at("d").get<int>();
    task = meta.at("task").get<std::string>();
    if (meta.contains("num_classes") && !meta.at("num_classes").is_null())
      ds.num_classes = meta.at("num_classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  if (task == "classification") {
    ds.task = Task::classification;
    if (ds.num_classes <= 0) throw FormatError("classification bundle needs num_classes > 0");
  } else if (task == "regression") {
    ds.task = Task::regression;
    ds.num_classes = 0;
  } else {
    throw FormatError("meta.json: unknown task '" + task + "'");
  }
  if (n <= 0 || d < 0) throw FormatError("meta.json: invalid n or d");

  ds.graph = read_edges_tsv((root / "edges.tsv").string(), n);

  {
    auto in = open_in(root / "features.csv");
    ds.features.resize(d, n);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      if (row >= n) throw FormatError("features.csv has more than n rows");
      const std::string where = "features.csv row " + std::to_string(row);
      std::string_view sv(line);
      int col = 0;
      while (true) {
        auto p = sv.find(',');
        if (col >= d) throw FormatError("too many columns in " + where);
        ds.features(col++, row) = parse_double(sv.substr(0, p), where);
        if (p == std::string_view::npos) break;
        sv.remove_prefix(p + 1);
      }
      if (col != d) throw FormatError("expected " + std::to_string(d) + " columns in " + where);
      ++row;
    }
    if (row != n) throw FormatError("features.csv has " + std::to_string(row) + " rows, expected " +
                                    std::to_string(n));
  }

  {
    auto in = open_in(root / "labels.csv");
    ds.labels.resize(n);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      if (row >= n) throw FormatError("labels.csv has more than n rows");
      const std::string where = "labels.csv row " + std::to_string(row);
      double y = parse_double(line, where);
      if (ds.task == Task::classification) {
        if (std::isnan(y) || y != std::floor(y)) throw FormatError("non-integer class in " + where);
        if (y >= ds.num_classes) throw FormatError("class id out of range in " + where);
        if (y < 0) y = -1.0;
      }
      ds.labels(row++) = y;
    }
    if (row != n) throw FormatError("labels.csv row count mismatch");
  }

  {
    auto in = open_in(root / "split.csv");
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      b.split.assignment.push_back(parse_split(line));
    }
    if (static_cast<int>(b.split.assignment.size()) != n)
      throw FormatError("split.csv row count mismatch");
  }

  validate_split(b.split, ds);
  return b;
}

void write_bundle(const std::string& dir, const NodeDataset& data, const SplitMask& split) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string());

  nlohmann::json meta;
  meta["name"] = data.name;
  meta["n"] = data.n();
  meta["d"] = data.d0();
  meta["task"] = to_string(data.task);
  if (data.task == Task::classification)
    meta["num_classes"] = data.num_classes;
  else
    meta["num_classes"] = nullptr;
  {
    std::ofstream out(root / "meta.json");
    if (!out) throw IoError("cannot write meta.json");
    out << meta.dump(2) << '\n';
  }
  write_edges_tsv((root / "edges.tsv").string(), data.graph);
  {
    std::ofstream out(root / "features.csv");
    if (!out) throw IoError("cannot write features.csv");
    for (int i = 0; i < data.n(); ++i) {
      for (int k = 0; k < data.d0(); ++k) {
        if (k) out << ',';
        out << fmt_double(data.features(k, i));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(root / "labels.csv");
    if (!out) throw IoError("cannot write labels.csv");
    for (int i = 0; i < data.n(); ++i) {
      if (data.task == Task::classification)
        out << static_cast<long>(data.labels(i)) << '\n';
      else
        out << fmt_double(data.labels(i)) << '\n';
    }
  }
  {
    std::ofstream out(root / "split.csv");
    if (!out) throw IoError("cannot write split.csv");
    for (Split s : split.assignment) out << to_string(s) << '\n';
  }
}

}  // namespace gnk
