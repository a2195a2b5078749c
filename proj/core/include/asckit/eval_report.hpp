#pragma once

#include <array>
#include <string>
#include <vector>

#include "asckit/common.hpp"

#include "json.hpp"

namespace asckit {

// Confusion matrix (rows = true class), per-class accuracy and their
// unweighted mean. Classes absent from the test set get class_accuracy -1,
// are excluded from the macro mean and produce a warning.
struct EvalReport {
  std::string system;
  int split_fraction = 100;
  std::array<std::array<int64_t, kNumClasses>, kNumClasses> confusion{};
  std::array<double, kNumClasses> class_accuracy{};
  double macro_accuracy = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static EvalReport load(const std::string& path);
};

// Tallies a report from parallel (true, predicted) class index lists.
EvalReport tally_report(const std::vector<int>& truths,
                        const std::vector<int>& predictions);

// Comparison table across reports: rows = split fractions, columns = systems,
// cells = stored macro accuracy. Missing combinations stay empty.
std::string macro_table_csv(const std::vector<EvalReport>& reports);

// Per-class accuracy table: one row per class, one column per report.
std::string class_accuracy_csv(const std::vector<EvalReport>& reports);

// Grouped per-class accuracy bar chart as a standalone SVG document.
std::string class_accuracy_svg(const std::vector<EvalReport>& reports);

}  // namespace asckit
