// gnk: kernels, fitting, finite-width simulation and sparsification for node-level tasks.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "gnk/errors.hpp"
#include "gnk/finite.hpp"
#include "gnk/gat.hpp"
#include "gnk/kernel.hpp"
#include "gnk/predictor.hpp"
#include "gnk/sparsifier.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using namespace gnk;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

constexpr const char* kDefaults = R"(default                     value               rationale
depth                       2 (sgnngp/sgntk: 3) two layers everywhere; skip connections only act from three layers
adjacency (gnn, skip)       kipf                symmetric normalization with self loops keeps the spectrum in [0, 2]
adjacency (gat)             self_loops          attention acts on the 0-1 adjacency with self loops
adjacency (fcn)             identity            a fully-connected net is a GNN with A = I
sigma_w2, sigma_c2          1                   fixed, no tuning
sigma_b2                    0 / 0.1             classification / regression
activation                  relu                layer nonlinearity of fcn, gnn and skip models
gat sigma1 / sigma2         identity / leaky_relu:0.2
gat placement               inside              attention nonlinearity applied to the masked scores
bias_in_derivative          true                derivative kernel carries sigma_b2 as in the closed forms; use false
                                                for the Jacobian Gram of the finite network
input scaling               1/d0                base kernel sigma_w2 X^T X / d0 + sigma_b2
lambda grid                 0.001:10:25         log grid, best lambda picked on the validation split
metric                      accuracy / r2       classification / regression
train (simulate)            gd, lr 0.001, mse with summed reduction, ntk drift every 10 epochs
sparsify                    binarized weights   --weighted keeps w_e / pi_e instead
threads                     1                   caps the number of concurrent simulate runs
)";

struct Shared {
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  bool explain = false;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--dataset", s.dataset, "dataset bundle directory");
  app->add_option("--out", s.out, "output path");
  app->add_option("--seed", s.seed, "random seed");
  app->add_option("--threads", s.threads, "worker cap")->check(CLI::PositiveNumber);
  app->add_flag("--explain-defaults", s.explain, "print every default with its rationale");
}

std::string require(const std::string& v, const char* flag) {
  if (v.empty()) throw ValidationError(std::string(flag) + " is required");
  return v;
}

// ---- kernel ---------------------------------------------------------------

struct KernelArgs {
  std::string model = "gntk";
  std::string adjacency;
  int depth = 0;
  std::string activation = "relu";
  double sigma_w2 = 1.0, sigma_c2 = 1.0;
  std::optional<double> sigma_b2;
  std::string sigma1 = "identity", sigma2 = "leaky_relu:0.2", placement = "inside";
  bool gat_bias = false;
  bool bias_in_derivative = true;
  bool no_input_scaling = false;
  std::int64_t oracle_samples = 0;
};

struct ModelChoice {
  std::string family;  // fcn, gnn, skip_gnn, gat
  KernelKind kind;
};

ModelChoice parse_model(const std::string& m) {
  static const std::pair<const char*, ModelChoice> table[] = {
      {"nngp", {"fcn", KernelKind::gp}},      {"ntk", {"fcn", KernelKind::ntk}},
      {"gnngp", {"gnn", KernelKind::gp}},     {"gntk", {"gnn", KernelKind::ntk}},
      {"sgnngp", {"skip_gnn", KernelKind::gp}}, {"sgntk", {"skip_gnn", KernelKind::ntk}},
      {"gatgp", {"gat", KernelKind::gp}},     {"gatntk", {"gat", KernelKind::ntk}},
  };
  for (const auto& [name, c] : table)
    if (m == name) return c;
  throw ValidationError("unknown model '" + m + "' (nngp, ntk, gnngp, gntk, sgnngp, sgntk, gatgp, gatntk)");
}

AdjMode default_adjacency(const std::string& family) {
  if (family == "fcn") return AdjMode::identity;
  if (family == "gat") return AdjMode::self_loops;
  return AdjMode::kipf;
}

HyperParams task_hp(Task t, double sw2, std::optional<double> sb2, double sc2) {
  HyperParams hp;
  hp.sigma_w2 = sw2;
  hp.sigma_c2 = sc2;
  hp.sigma_b2 = sb2 ? *sb2 : (t == Task::regression ? 0.1 : 0.0);
  hp.validate();
  return hp;
}

Mat compute_kernel(const KernelArgs& a, const NodeDataset& data) {
  const ModelChoice mc = parse_model(a.model);
  const AdjMode mode = a.adjacency.empty() ? default_adjacency(mc.family) : parse_adj_mode(a.adjacency);
  const AdjacencyOperator A = build_adjacency(data.graph, mode);
  HyperParams hp = task_hp(data.task, a.sigma_w2, a.sigma_b2, a.sigma_c2);
  hp.normalize_input_by_d0 = !a.no_input_scaling;
  const int depth = a.depth > 0 ? a.depth : (mc.family == "skip_gnn" ? 3 : 2);
  if (mc.family == "gat") {
    GatSpec g;
    g.depth = depth;
    g.hp = hp;
    g.sigma1 = parse_activation(a.sigma1);
    g.sigma2 = parse_activation(a.sigma2);
    g.placement = parse_placement(a.placement);
    g.bias = a.gat_bias;
    return mc.kind == KernelKind::gp ? gat_gp(g, A, data.features) : gat_ntk(g, A, data.features);
  }
  ModelSpec s;
  s.arch = parse_arch(mc.family);
  s.depth = depth;
  s.hp = hp;
  s.act = parse_activation(a.activation);
  s.bias_in_derivative = a.bias_in_derivative;
  s.oracle_samples = a.oracle_samples;
  return mc.kind == KernelKind::gp ? compute_gp(s, A, data.features) : compute_ntk(s, A, data.features);
}

int run_kernel(const Shared& sh, const KernelArgs& a) {
  const Bundle b = load_bundle(require(sh.dataset, "--dataset"));
  const std::string out = require(sh.out, "--out");
  const Mat K = compute_kernel(a, b.data);
  write_kernel(out, K);
  std::cout << "wrote " << K.rows() << "x" << K.cols() << " kernel to " << out << '\n';
  return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string kernel;
  std::string grid = "0.001:10:25";
  std::string metric;
  std::string model;
  std::string timestamp;
};

std::vector<double> parse_grid(const std::string& g) {
  std::vector<std::string> parts;
  std::stringstream ss(g);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.size() != 3) throw ValidationError("--grid expects lo:hi:count");
  try {
    return log_grid(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]));
  } catch (const std::logic_error&) {
    throw ValidationError("--grid expects lo:hi:count");
  }
}

// --timestamp, then SOURCE_DATE_EPOCH, then the wall clock.
std::string iso_timestamp(const std::string& given) {
  if (!given.empty()) return given;
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(env));
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int run_fit(const Shared& sh, const FitArgs& a) {
  const Bundle b = load_bundle(require(sh.dataset, "--dataset"));
  const Mat K = read_kernel(require(a.kernel, "--kernel"));
  if (K.rows() != b.data.n()) throw ValidationError("kernel size does not match the dataset");
  FitConfig cfg;
  cfg.lambda_grid = parse_grid(a.grid);
  cfg.metric = a.metric.empty() ? default_metric(b.data.task) : parse_metric(a.metric);
  const GridResult r = grid_search(K, b.data, b.split, cfg);
  ResultRow row;
  row.model = a.model.empty() ? fs::path(a.kernel).stem().string() : a.model;
  row.dataset = b.data.name;
  row.lambda = r.best_lambda;
  row.val_score = r.val_score;
  row.test_score = r.test_score;
  row.metric = to_string(cfg.metric);
  row.timestamp = iso_timestamp(a.timestamp);
  std::cout << row.model << ' ' << row.dataset << " lambda=" << row.lambda << " val=" << row.val_score
            << " test=" << row.test_score << " (" << row.metric << ")\n";
  if (!sh.out.empty()) {
    const fs::path parent = fs::path(sh.out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    append_result_csv(sh.out, row);
  }
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  std::string arch = "gnn";
  std::string adjacency;
  int depth = 2;
  std::vector<int> widths{10, 100, 1000};
  int heads = 0;
  std::string activation;
  std::string sigma1 = "identity";
  double sigma_w2 = 1.0, sigma_c2 = 1.0;
  std::optional<double> sigma_b2;
  std::string optimizer = "gd", loss = "mse", reduction = "sum";
  double lr = 1e-3;
  int epochs = 200;
  int track_ntk_every = 10;
};

int run_simulate(const Shared& sh, const SimArgs& a) {
  const Bundle b = load_bundle(require(sh.dataset, "--dataset"));
  const std::string out = require(sh.out, "--out");
  const NetArch arch = parse_net_arch(a.arch);
  NetSpec spec;
  spec.arch = arch;
  spec.hp = task_hp(b.data.task, a.sigma_w2, a.sigma_b2, a.sigma_c2);
  spec.act = parse_activation(a.activation.empty() ? (arch == NetArch::gat ? "leaky_relu:0.2" : "relu")
                                                    : a.activation);
  spec.sigma1 = parse_activation(a.sigma1);
  const AdjMode mode = a.adjacency.empty() ? default_adjacency(to_string(arch)) : parse_adj_mode(a.adjacency);
  if (a.depth < 1) throw ValidationError("--depth must be >= 1");
  TrainConfig cfg;
  cfg.optimizer = parse_optimizer(a.optimizer);
  cfg.loss = parse_loss(a.loss);
  cfg.reduction = parse_reduction(a.reduction);
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.track_ntk_every = a.track_ntk_every;
  const int dL = b.data.task == Task::classification ? b.data.num_classes : 1;
  fs::create_directories(out);

  // widths run concurrently up to --threads, each with its own seed stream
  std::vector<int> status(a.widths.size(), 0);
  std::vector<std::string> messages(a.widths.size());
  auto job = [&](std::size_t k) {
    const int w = a.widths[k];
    std::vector<int> widths{b.data.d0()};
    for (int l = 1; l < a.depth; ++l) widths.push_back(w);
    widths.push_back(dL);
    const std::string path = (fs::path(out) / ("trace_w" + std::to_string(w) + ".csv")).string();
    try {
      FiniteNet net = init_network(spec, widths, a.heads > 0 ? a.heads : w, sh.seed * 1000003ULL + k);
      const TrainingTrace t = train(net, b.data, b.split, mode, cfg);
      t.write_csv(path);
      const auto& r = t.rows.back();
      messages[k] = "width " + std::to_string(w) + ": loss " + std::to_string(r.loss) + ", weight drift " +
                    std::to_string(r.weight_drift) + ", ntk drift " + std::to_string(r.ntk_drift);
    } catch (const DivergedTraining& e) {
      e.trace.write_csv(path);
      messages[k] = std::string("width ") + std::to_string(w) + ": " + e.what();
      status[k] = kExitNumerical;
    } catch (const NumericalError& e) {
      messages[k] = e.what();
      status[k] = kExitNumerical;
    } catch (const Error& e) {
      messages[k] = e.what();
      status[k] = kExitConfig;
    }
  };
  std::size_t next = 0;
  std::mutex m;
  std::vector<std::thread> pool;
  const int workers = std::min<int>(sh.threads, static_cast<int>(a.widths.size()));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      while (true) {
        std::size_t k;
        {
          std::lock_guard<std::mutex> lock(m);
          if (next >= a.widths.size()) return;
          k = next++;
        }
        job(k);
      }
    });
  for (auto& t : pool) t.join();
  int rc = 0;
  for (std::size_t k = 0; k < a.widths.size(); ++k) {
    (status[k] ? std::cerr : std::cout) << messages[k] << '\n';
    rc = std::max(rc, status[k]);
  }
  return rc;
}

// ---- sparsify -------------------------------------------------------------

struct SparsifyArgs {
  double keep = 0.5;
  bool weighted = false;
  std::string resistances;
};

int run_sparsify(const Shared& sh, const SparsifyArgs& a) {
  const Bundle b = load_bundle(require(sh.dataset, "--dataset"));
  const std::string out = require(sh.out, "--out");
  ResistanceOptions opt;
  opt.seed = sh.seed;
  const ResistanceTable R = effective_resistances(b.data.graph, opt);
  if (!a.resistances.empty()) write_resistances_tsv(a.resistances, b.data.graph, R);
  const SparsifyResult s = sparsify(b.data.graph, R, a.keep, sh.seed, !a.weighted);
  NodeDataset d = b.data;
  d.graph = s.graph;
  write_bundle(out, d, b.split);
  std::cout << "kept " << s.graph.edges.size() << " of " << b.data.graph.edges.size() << " edges ("
            << (R.exact ? "exact" : "sketched") << " resistances)\n";
  return 0;
}

// ---- report ---------------------------------------------------------------

int run_report(const Shared& sh, const std::string& results) {
  const auto rows = tools::read_results_dir(require(results, "--results"));
  const tools::Report r = tools::aggregate(rows);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << tools::render(r);
  if (!sh.out.empty()) tools::write_report_csv(sh.out, r);
  return 0;
}

// Flat key=value config file: each entry becomes --key=value ahead of the command line,
// so explicit flags (parsed later, last value wins) override it.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      continue;
    }
    out.push_back(args[i]);
  }
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::vector<std::string> from_file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line.erase(0, line.find_first_not_of(" \t"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    from_file.push_back("--" + key + "=" + value);
  }
  // insert after the subcommand name (first positional argument)
  std::size_t pos = 0;
  while (pos < out.size() && out[pos].rfind("--", 0) == 0) ++pos;
  if (pos < out.size()) ++pos;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), from_file.begin(), from_file.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gnk: graph neural network kernels"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(0, 1);
  Shared sh;
  app.add_flag("--explain-defaults", sh.explain, "print every default with its rationale");
  app.add_option("--config", "flat key=value file; command-line flags override it");

  KernelArgs ka;
  auto* kernel = app.add_subcommand("kernel", "compute a GP or NTK kernel over a dataset");
  add_shared(kernel, sh);
  kernel->add_option("--model", ka.model, "nngp, ntk, gnngp, gntk, sgnngp, sgntk, gatgp, gatntk");
  kernel->add_option("--adjacency", ka.adjacency, "identity, raw01, self_loops, laplacian, kipf");
  kernel->add_option("--depth", ka.depth, "number of layers");
  kernel->add_option("--activation", ka.activation);
  kernel->add_option("--sigma-w2", ka.sigma_w2);
  kernel->add_option("--sigma-b2", ka.sigma_b2);
  kernel->add_option("--sigma-c2", ka.sigma_c2);
  kernel->add_option("--sigma1", ka.sigma1, "gat attention nonlinearity");
  kernel->add_option("--sigma2", ka.sigma2, "gat layer nonlinearity");
  kernel->add_option("--placement", ka.placement, "gat: inside or hadamard_first");
  kernel->add_flag("--gat-bias", ka.gat_bias);
  kernel->add_option("--bias-in-derivative", ka.bias_in_derivative);
  kernel->add_flag("--no-input-scaling", ka.no_input_scaling, "drop the 1/d0 factor of the base kernel");
  kernel->add_option("--oracle-samples", ka.oracle_samples, "Monte-Carlo samples for sigmoid/exp");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "kernel ridge regression with a validation grid search");
  add_shared(fit, sh);
  fit->add_option("--kernel", fa.kernel, "kernel file");
  fit->add_option("--grid", fa.grid, "lo:hi:count log grid of lambda");
  fit->add_option("--metric", fa.metric, "accuracy or r2");
  fit->add_option("--model", fa.model, "model label for the results row");
  fit->add_option("--timestamp", fa.timestamp, "ISO-8601 timestamp for the results row");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "train finite-width networks and trace drift");
  add_shared(sim, sh);
  sim->add_option("--arch", sa.arch, "fcn, gnn, skip_gnn, gat");
  sim->add_option("--adjacency", sa.adjacency);
  sim->add_option("--depth", sa.depth);
  sim->add_option("--widths", sa.widths)->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sim->add_option("--heads", sa.heads, "gat heads (0: equal to the width)");
  sim->add_option("--activation", sa.activation);
  sim->add_option("--sigma1", sa.sigma1);
  sim->add_option("--sigma-w2", sa.sigma_w2);
  sim->add_option("--sigma-b2", sa.sigma_b2);
  sim->add_option("--sigma-c2", sa.sigma_c2);
  sim->add_option("--optimizer", sa.optimizer, "gd or adam");
  sim->add_option("--loss", sa.loss, "mse or cross_entropy");
  sim->add_option("--reduction", sa.reduction, "sum or mean");
  sim->add_option("--lr", sa.lr);
  sim->add_option("--epochs", sa.epochs);
  sim->add_option("--track-ntk-every", sa.track_ntk_every, "0 disables NTK tracking");

  SparsifyArgs pa;
  auto* sp = app.add_subcommand("sparsify", "effective-resistance edge sampling");
  add_shared(sp, sh);
  sp->add_option("--keep", pa.keep, "fraction of edges kept");
  sp->add_flag("--weighted", pa.weighted, "reweight kept edges by inverse inclusion probability");
  sp->add_option("--resistances", pa.resistances, "also write per-edge resistances (TSV)");

  std::string results;
  auto* rep = app.add_subcommand("report", "aggregate result CSVs into tables");
  add_shared(rep, sh);
  rep->add_option("--results", results, "directory of result CSVs");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (sh.explain) {
    std::cout << kDefaults;
    return 0;
  }
  Eigen::setNbThreads(sh.threads);
  try {
    if (*kernel) return run_kernel(sh, ka);
    if (*fit) return run_fit(sh, fa);
    if (*sim) return run_simulate(sh, sa);
    if (*sp) return run_sparsify(sh, pa);
    if (*rep) return run_report(sh, results);
    std::cout << app.help();
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DivergedError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DegenerateError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
