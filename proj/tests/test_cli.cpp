#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "gnk/errors.hpp"
#include "gnk/kernel.hpp"
#include "report.hpp"

using namespace gnk;
using namespace gnk::test;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run gnk_cli(const std::string& args) {
  const std::string cmd = std::string(GNK_BINARY) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  Run r;
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ResultRow row(std::string model, std::string ds, double test, std::string metric, std::string ts) {
  return {std::move(model), std::move(ds), 0.1, test, test, std::move(metric), std::move(ts)};
}

}  // namespace

TEST(Report, AggregateKeepsLatestAndSorts) {
  const auto r = tools::aggregate({row("gntk", "wiki", 0.5, "r2", "2024-01-02T00:00:00Z"),
                                   row("gntk", "cora", 0.8, "accuracy", "2024-01-01T00:00:00Z"),
                                   row("gntk", "cora", 0.83, "accuracy", "2024-01-03T00:00:00Z"),
                                   row("gntk", "cora", 0.7, "accuracy", "2024-01-02T00:00:00Z"),
                                   row("gatgp", "cora", 0.81, "accuracy", "2024-01-01T00:00:00Z")});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.warnings.size(), 2u);
  EXPECT_EQ(r.rows[0].model, "gatgp");
  EXPECT_EQ(r.rows[1].model, "gntk");
  EXPECT_EQ(r.rows[1].test_score, 0.83);
  EXPECT_EQ(r.rows[2].dataset, "wiki");
  const std::string text = tools::render(r);
  EXPECT_NE(text.find("classification"), std::string::npos);
  EXPECT_NE(text.find("regression"), std::string::npos);
  EXPECT_NE(text.find("0.8300"), std::string::npos);
}

TEST(Report, EmptyDirectoryIsError) {
  EXPECT_THROW(tools::read_results_dir(temp_dir("empty_results")), ValidationError);
  EXPECT_THROW(tools::read_results_dir("/nonexistent/results"), ValidationError);
}

TEST(Cli, NoSubcommandAndBadFlags) {
  EXPECT_EQ(gnk_cli("").code, 2);
  EXPECT_EQ(gnk_cli("kernel --no-such-flag").code, 2);
  EXPECT_EQ(gnk_cli("kernel --model gntk --out /tmp/x.bin").code, 2);
  EXPECT_EQ(gnk_cli("kernel --model bogus --dataset " + karate_dir() + " --out /tmp/x.bin").code, 2);
  EXPECT_EQ(gnk_cli("kernel --threads 0").code, 2);
  EXPECT_EQ(gnk_cli("kernel --dataset /nonexistent --model gntk --out /tmp/x.bin").code, 2);
}

TEST(Cli, ExplainDefaults) {
  const auto r = gnk_cli("--explain-defaults");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sigma"), std::string::npos);
  EXPECT_EQ(gnk_cli("simulate --explain-defaults").code, 0);
}

TEST(Cli, KernelFitReportPipeline) {
  const std::string dir = temp_dir("cli_pipeline");
  const std::string k1 = dir + "/gntk.bin", k2 = dir + "/gntk_again.bin";
  ASSERT_EQ(gnk_cli("kernel --model gntk --dataset " + karate_dir() + " --out " + k1).code, 0);
  ASSERT_EQ(gnk_cli("kernel --model gntk --dataset " + karate_dir() + " --out " + k2 + " --threads 2").code, 0);
  EXPECT_EQ(slurp(k1), slurp(k2));
  const Mat K = read_kernel(k1);
  EXPECT_EQ(K.rows(), 34);

  // karate has no validation nodes
  EXPECT_EQ(gnk_cli("fit --kernel " + k1 + " --dataset " + karate_dir() + " --out " + dir + "/res/a.csv").code, 2);

  // same bundle with a validation split carved out of train
  Bundle b = load_bundle(karate_dir());
  int moved = 0;
  for (auto& s : b.split.assignment)
    if (s == Split::train && moved < 6) {
      s = Split::val;
      ++moved;
    }
  const std::string ds = dir + "/karate_val";
  write_bundle(ds, b.data, b.split);
  const std::string fit = "fit --kernel " + k1 + " --dataset " + ds + " --out " + dir + "/res/a.csv --timestamp ";
  ASSERT_EQ(gnk_cli(fit + "2024-01-01T00:00:00Z").code, 0);
  ASSERT_EQ(gnk_cli(fit + "2024-01-02T00:00:00Z").code, 0);
  const auto rows = read_result_csv(dir + "/res/a.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].model, "gntk");
  EXPECT_EQ(rows[0].test_score, rows[1].test_score);
  EXPECT_GT(rows[0].test_score, 0.5);

  const auto rep = gnk_cli("report --results " + dir + "/res --out " + dir + "/summary.csv");
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("warning"), std::string::npos);
  EXPECT_EQ(read_result_csv(dir + "/summary.csv").size(), 1u);
  EXPECT_EQ(gnk_cli("report --results " + dir + "/nothing").code, 2);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  const std::string dir = temp_dir("cli_config");
  std::ofstream(dir + "/run.cfg") << "# kernel settings\nmodel=gntk\ndepth=3\nsigma_b2=0.0\n";
  ASSERT_EQ(gnk_cli("kernel --config " + dir + "/run.cfg --dataset " + karate_dir() + " --out " + dir + "/a.bin --depth 2")
                .code,
            0);
  ASSERT_EQ(gnk_cli("kernel --model gntk --depth 2 --sigma-b2 0 --dataset " + karate_dir() + " --out " + dir + "/b.bin")
                .code,
            0);
  EXPECT_EQ(slurp(dir + "/a.bin"), slurp(dir + "/b.bin"));
  EXPECT_EQ(gnk_cli("kernel --config " + dir + "/missing.cfg").code, 2);
}

TEST(Cli, SparsifyKeepsBudget) {
  const std::string dir = temp_dir("cli_sparsify");
  const auto r = gnk_cli("sparsify --dataset " + karate_dir() + " --keep 0.5 --seed 3 --out " + dir + "/sp --resistances " +
                         dir + "/r.tsv");
  ASSERT_EQ(r.code, 0) << r.out;
  const Bundle b = load_bundle(dir + "/sp");
  EXPECT_EQ(b.data.graph.num_edges(), 39u);
  for (double w : b.data.graph.weights) EXPECT_EQ(w, 1.0);
  EXPECT_TRUE(fs::exists(dir + "/r.tsv"));
  EXPECT_EQ(gnk_cli("sparsify --dataset " + karate_dir() + " --keep 0 --out " + dir + "/sp2").code, 2);
}

TEST(Cli, SimulateWritesTraces) {
  const std::string dir = temp_dir("cli_simulate");
  const auto r = gnk_cli("simulate --dataset " + karate_dir() + " --widths 8,16 --epochs 5 --track-ntk-every 5 --out " + dir);
  ASSERT_EQ(r.code, 0) << r.out;
  for (int w : {8, 16}) {
    std::ifstream in(dir + "/trace_w" + std::to_string(w) + ".csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 7);
  }
  const auto d = gnk_cli("simulate --dataset " + karate_dir() + " --widths 8 --epochs 200 --activation identity --lr 1e4 --out " + dir + "/div");
  EXPECT_EQ(d.code, 3);
  EXPECT_TRUE(fs::exists(dir + "/div/trace_w8.csv"));
}
