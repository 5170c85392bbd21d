#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "common.hpp"
#include "gnk/errors.hpp"
#include "gnk/predictor.hpp"

using namespace gnk;
using namespace gnk::test;

namespace {

NodeDataset classification_data(int n, int classes, std::uint64_t seed) {
  NodeDataset d;
  d.name = "synthetic";
  d.graph = Graph::from_edges(n, {});
  d.features = randn(2, n, seed);
  d.labels.resize(n);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) d.labels(i) = static_cast<double>(rng() % classes);
  d.num_classes = classes;
  return d;
}

NodeDataset regression_data(const Vec& y) {
  NodeDataset d;
  d.graph = Graph::from_edges(static_cast<int>(y.size()), {});
  d.features = Mat::Ones(1, y.size());
  d.labels = y;
  d.task = Task::regression;
  return d;
}

SplitMask thirds(int n) {
  SplitMask m;
  for (int i = 0; i < n; ++i) m.assignment.push_back(i % 3 == 0 ? Split::val : i % 3 == 1 ? Split::test : Split::train);
  return m;
}

}  // namespace

TEST(Krr, IdentityKernelInterpolatesTrain) {
  const auto d = classification_data(6, 3, 1);
  SplitMask all{std::vector<Split>(6, Split::train)};
  const auto p = krr_predict(Mat::Identity(6, 6), d, all, 1e-12);
  const Mat Y = encode_targets(d);
  EXPECT_LT(max_abs(p.values - Y), 1e-9);  // shrinkage by lambda plus jitter
  for (int i = 0; i < 6; ++i) EXPECT_EQ(p.hard_labels[i], static_cast<int>(d.labels(i)));
}

TEST(Krr, IdentityKernelZeroOnTest) {
  const auto d = classification_data(9, 2, 2);
  const auto p = krr_predict(Mat::Identity(9, 9), d, thirds(9), 0.7);
  for (int i : thirds(9).indices(Split::test)) EXPECT_EQ(p.values.row(i).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Krr, RankOneKernel) {
  Mat Y(2, 1);
  Y << 1.0, 0.0;
  const auto p = krr_solve(Mat::Ones(2, 2), Y, {0}, 0.0, false);
  EXPECT_NEAR(p.values(1, 0), 1.0, 1e-9);
}

TEST(Krr, Errors) {
  const auto d = classification_data(6, 2, 3);
  EXPECT_THROW(krr_predict(Mat::Identity(6, 6), d, thirds(6), 0.0), ValidationError);
  EXPECT_THROW(krr_predict(Mat::Identity(5, 5), d, thirds(6), 1.0), ValidationError);
  Mat bad = -Mat::Identity(3, 3);
  EXPECT_THROW(krr_solve(bad, Mat::Ones(3, 1), {0, 1}, 0.0, false), NumericalError);
}

TEST(Krr, VarianceMatchesFormula) {
  const Mat K = random_psd(6, 4);
  const std::vector<int> tr{0, 2, 5};
  KrrOptions opt;
  opt.with_variance = true;
  const auto p = krr_solve(K, Mat::Ones(6, 1), tr, 0.1, false, opt);
  Mat Ktt(3, 3), Kat(6, 3);
  for (int b = 0; b < 3; ++b) {
    Kat.col(b) = K.col(tr[b]);
    for (int a = 0; a < 3; ++a) Ktt(a, b) = K(tr[a], tr[b]);
  }
  Ktt.diagonal().array() += 0.1;
  const Vec expect = K.diagonal() - (Kat * Ktt.inverse() * Kat.transpose()).diagonal();
  EXPECT_LT((p.variance - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evaluate, Examples) {
  Vec y(4);
  y << 1.0, 2.0, 3.0, 6.0;
  const auto d = regression_data(y);
  Prediction p;
  p.values = y;
  const std::vector<int> all{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(evaluate(p, d, all, Metric::r2), 1.0);
  p.values = Mat::Constant(4, 1, 3.0);
  EXPECT_NEAR(evaluate(p, d, all, Metric::r2), 0.0, 1e-15);
  // R^2 uses the mean of the evaluated subset
  p.values = Mat::Constant(4, 1, 2.5);
  EXPECT_NEAR(evaluate(p, d, {0, 1, 2}, Metric::r2), 1.0 - 2.75 / 2.0, 1e-15);
  EXPECT_THROW(evaluate(p, d, {}, Metric::r2), ValidationError);

  const auto c = classification_data(5, 3, 4);
  Prediction q;
  for (int i = 0; i < 5; ++i) q.hard_labels.push_back(static_cast<int>(c.labels(i)));
  EXPECT_DOUBLE_EQ(evaluate(q, c, {0, 1, 2, 3, 4}, Metric::accuracy), 1.0);
  for (auto& h : q.hard_labels) h = (h + 1) % 3;
  EXPECT_DOUBLE_EQ(evaluate(q, c, {0, 1, 2, 3, 4}, Metric::accuracy), 0.0);
}

TEST(Evaluate, ConstantTargets) {
  const auto d = regression_data(Vec::Constant(3, 2.0));
  Prediction p;
  p.values = Mat::Constant(3, 1, 2.0);
  EXPECT_DOUBLE_EQ(evaluate(p, d, {0, 1, 2}, Metric::r2), 1.0);
  p.values(1, 0) = 2.5;
  EXPECT_THROW(evaluate(p, d, {0, 1, 2}, Metric::r2), DegenerateError);
}

TEST(GridSearch, TiesPickSmallestLambda) {
  const auto d = classification_data(12, 2, 5);
  FitConfig cfg;
  cfg.lambda_grid = {0.01, 0.1, 1.0};
  const auto r = grid_search(Mat::Identity(12, 12), d, thirds(12), cfg);
  EXPECT_EQ(r.val_scores[0], r.val_scores[2]);
  EXPECT_DOUBLE_EQ(r.best_lambda, 0.01);
  cfg.lambda_grid = {0.3};
  EXPECT_DOUBLE_EQ(grid_search(Mat::Identity(12, 12), d, thirds(12), cfg).best_lambda, 0.3);
}

TEST(GridSearch, PicksBestValidationScore) {
  Vec y(30);
  for (int i = 0; i < 30; ++i) y(i) = std::sin(0.3 * i);
  const auto d = regression_data(y);
  Mat K(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) K(i, j) = std::exp(-0.05 * (i - j) * (i - j));
  FitConfig cfg;
  cfg.metric = Metric::r2;
  const auto r = grid_search(K, d, thirds(30), cfg);
  const double best = *std::max_element(r.val_scores.begin(), r.val_scores.end());
  EXPECT_EQ(r.val_score, best);
  EXPECT_GT(r.test_score, 0.9);
}

TEST(FitConfigTest, Validation) {
  FitConfig cfg;
  EXPECT_EQ(cfg.lambda_grid.size(), 25u);
  EXPECT_NEAR(cfg.lambda_grid.front(), 1e-3, 1e-15);
  EXPECT_NEAR(cfg.lambda_grid.back(), 10.0, 1e-12);
  cfg.lambda_grid = {1.0, 0.5};
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.lambda_grid = {};
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(PredictorProperty, RidgeShrinksFittedValues) {
  for (int trial = 0; trial < 20; ++trial) {
    const Mat K = random_psd(10, 60 + trial, 2.0);
    const Mat Y = randn(10, 2, 70 + trial);
    const std::vector<int> tr{0, 1, 3, 4, 6, 8, 9};
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
      const auto p = krr_solve(K, Y, tr, lam, false);
      double norm = 0.0;
      for (int i : tr) norm += p.values.row(i).squaredNorm();
      EXPECT_LE(std::sqrt(norm), prev + 1e-12);
      prev = std::sqrt(norm);
    }
  }
}

TEST(PredictorProperty, PermutationEquivariance) {
  const int n = 12;
  const auto d = classification_data(n, 3, 9);
  const Mat K = random_psd(n, 10);
  const SplitMask m = thirds(n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(11));
  NodeDataset dp = d;
  SplitMask mp = m;
  Mat Kp(n, n);
  for (int i = 0; i < n; ++i) {
    dp.labels(i) = d.labels(perm[i]);
    mp.assignment[i] = m.assignment[perm[i]];
    for (int j = 0; j < n; ++j) Kp(i, j) = K(perm[i], perm[j]);
  }
  const auto a = krr_predict(K, d, m, 0.1);
  const auto b = krr_predict(Kp, dp, mp, 0.1);
  for (int i = 0; i < n; ++i) {
    EXPECT_LT((a.values.row(perm[i]) - b.values.row(i)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(a.hard_labels[perm[i]], b.hard_labels[i]);
  }
}

TEST(PredictorProperty, UniformTargetShiftKeepsLabels) {
  const auto d = classification_data(15, 4, 12);
  const Mat K = random_psd(15, 13);
  const Mat Y = encode_targets(d);
  std::vector<int> tr;
  for (int i = 0; i < 15; i += 2) tr.push_back(i);
  const auto a = krr_solve(K, Y, tr, 0.05, true);
  const auto b = krr_solve(K, (Y.array() + 0.7).matrix(), tr, 0.05, true);
  EXPECT_EQ(a.hard_labels, b.hard_labels);
  const Mat diff = b.values - a.values;
  for (int i = 0; i < 15; ++i) EXPECT_LT(diff.row(i).maxCoeff() - diff.row(i).minCoeff(), 1e-12);
}

TEST(ResultCsv, RoundTrip) {
  const std::string path = temp_dir("csv") + "/r.csv";
  ResultRow r{"gntk", "cora", 0.125, 0.8, 0.83, "accuracy", "2024-01-01T00:00:00Z"};
  append_result_csv(path, r);
  r.model = "gatgp";
  append_result_csv(path, r);
  const auto rows = read_result_csv(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].model, "gntk");
  EXPECT_EQ(rows[1].model, "gatgp");
  EXPECT_EQ(rows[0].lambda, 0.125);
  EXPECT_EQ(rows[0].test_score, 0.83);
  EXPECT_EQ(rows[1].timestamp, "2024-01-01T00:00:00Z");
  EXPECT_THROW(read_result_csv(temp_dir("csv2") + "/none.csv"), IoError);
}
