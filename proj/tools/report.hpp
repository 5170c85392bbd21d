#pragma once

#include <string>
#include <vector>

#include "gnk/predictor.hpp"

namespace gnk::tools {

struct Report {
  std::vector<ResultRow> rows;  // deduplicated, sorted by (dataset, model)
  std::vector<std::string> warnings;
};

// Keeps the latest row (by timestamp, then file order) per (model, dataset).
Report aggregate(const std::vector<ResultRow>& rows);

// Reads every *.csv in dir (sorted by name). Throws ValidationError when none exist.
std::vector<ResultRow> read_results_dir(const std::string& dir);

// One text table per task: models as rows, datasets as columns, test score in cells.
std::string render(const Report& r);

void write_report_csv(const std::string& path, const Report& r);

}  // namespace gnk::tools
