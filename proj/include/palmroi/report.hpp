#pragma once

// Evaluation report output: a JSON results document, a fixed-width text
// table for eyeballing and diffing, and CSV curve exports.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "palmroi/eval.hpp"

namespace palmroi {

struct Curve {
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

struct Report {
  std::string title;
  std::map<std::string, double> metrics;
  std::map<std::string, Curve> curves;

  std::string to_json() const;
  /// Two-column table, metrics in key order. Rates are shown as percentages
  /// when `percent_keys` holds the metric name.
  std::string to_table(const std::vector<std::string>& percent_keys = {}) const;
};

std::string curve_csv(const Curve& curve);

Curve det_curve(const DetCurve& curve);

/// FAR/TPR pairs of a calibration sweep.
Curve roc_points(const std::vector<CalibrationResult>& results);

}  // namespace palmroi
