#pragma once

#include <string>
#include <vector>

#include "gnk/graph.hpp"

namespace gnk {

enum class Metric { accuracy, r2 };
const char* to_string(Metric m);
Metric parse_metric(const std::string& s);
Metric default_metric(Task t);

std::vector<double> log_grid(double lo, double hi, int count);

struct FitConfig {
  std::vector<double> lambda_grid = log_grid(1e-3, 10.0, 25);
  Metric metric = Metric::accuracy;
  double jitter = 1e-10;
  double max_jitter = 1e-6;

  void validate() const;
};

struct Prediction {
  Mat values;                    // n x c (one-hot scores) or n x 1
  std::vector<int> hard_labels;  // classification only
  Vec variance;                  // optional, empty unless requested
};

struct KrrOptions {
  double jitter = 1e-10;
  double max_jitter = 1e-6;
  bool with_variance = false;
};

// K_{., train} (K_{train,train} + lambda I)^{-1} Y_train. lambda <= 0 -> ValidationError.
Prediction krr_predict(const Mat& K, const NodeDataset& data, const SplitMask& mask, double lambda,
                       const KrrOptions& opt = {});

// Lower-level entry point: explicit targets (n x c), accepts lambda >= 0.
Prediction krr_solve(const Mat& K, const Mat& Y, const std::vector<int>& train, double lambda,
                     bool classification, const KrrOptions& opt = {});

// Rows of one-hot targets; unlabeled nodes get zero rows.
Mat encode_targets(const NodeDataset& data);

// Throws ValidationError on an empty node set, DegenerateError when R^2 is undefined.
double evaluate(const Prediction& pred, const NodeDataset& data, const std::vector<int>& nodes, Metric metric);

struct GridResult {
  double best_lambda = 0.0;
  double val_score = 0.0;
  double test_score = 0.0;
  std::vector<double> val_scores;  // one per grid point
};

GridResult grid_search(const Mat& K, const NodeDataset& data, const SplitMask& mask, const FitConfig& cfg);

struct ResultRow {
  std::string model;
  std::string dataset;
  double lambda = 0.0;
  double val_score = 0.0;
  double test_score = 0.0;
  std::string metric;     // optional trailing column
  std::string timestamp;  // optional trailing column, ISO-8601
};

void append_result_csv(const std::string& path, const ResultRow& row);
std::vector<ResultRow> read_result_csv(const std::string& path);

}  // namespace gnk
