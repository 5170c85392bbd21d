#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "gnk/errors.hpp"

namespace gnk::tools {

namespace fs = std::filesystem;

namespace {

std::string task_of(const ResultRow& r) {
  if (r.metric == "accuracy") return "classification";
  if (r.metric == "r2") return "regression";
  return "unknown";
}

std::string cell(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

Report aggregate(const std::vector<ResultRow>& rows) {
  Report out;
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto key = std::make_pair(rows[i].model, rows[i].dataset);
    auto it = latest.find(key);
    if (it == latest.end()) {
      latest.emplace(key, i);
      continue;
    }
    out.warnings.push_back("duplicate result for model '" + key.first + "' on dataset '" + key.second +
                           "'; keeping the latest");
    // ISO-8601 strings order lexicographically; ties go to the later row
    if (rows[i].timestamp >= rows[it->second].timestamp) it->second = i;
  }
  for (const auto& [key, i] : latest) out.rows.push_back(rows[i]);
  std::sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.dataset, a.model) < std::tie(b.dataset, b.model);
  });
  return out;
}

std::vector<ResultRow> read_results_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("results directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<ResultRow> rows;
  for (const auto& f : files) {
    auto part = read_result_csv(f.string());
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw ValidationError("no result rows found in '" + dir + "'");
  return rows;
}

std::string render(const Report& r) {
  std::map<std::string, std::vector<const ResultRow*>> by_task;
  for (const auto& row : r.rows) by_task[task_of(row)].push_back(&row);
  std::ostringstream out;
  bool first = true;
  for (const auto& [task, rows] : by_task) {
    std::set<std::string> datasets, models;
    std::map<std::pair<std::string, std::string>, double> score;
    for (const auto* row : rows) {
      datasets.insert(row->dataset);
      models.insert(row->model);
      score[{row->model, row->dataset}] = row->test_score;
    }
    std::size_t w0 = 5;
    for (const auto& m : models) w0 = std::max(w0, m.size());
    if (!first) out << '\n';
    first = false;
    out << task << '\n';
    out << std::string(w0, ' ');
    for (const auto& d : datasets) out << "  " << d;
    out << '\n';
    for (const auto& m : models) {
      out << m << std::string(w0 - m.size(), ' ');
      for (const auto& d : datasets) {
        auto it = score.find({m, d});
        const std::string c = it == score.end() ? "-" : cell(it->second);
        const std::size_t w = std::max(d.size(), c.size());
        out << "  " << std::string(w - c.size(), ' ') << c;
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_report_csv(const std::string& path, const Report& r) {
  if (fs::exists(path)) fs::remove(path);
  for (const auto& row : r.rows) append_result_csv(path, row);
}

}  // namespace gnk::tools
