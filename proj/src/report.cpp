#include "palmroi/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace palmroi {

std::string Report::to_json() const {
  nlohmann::json doc;
  doc["title"] = title;
  doc["metrics"] = metrics;
  for (const auto& [name, c] : curves) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : c.points) pts.push_back({x, y});
    doc["curves"][name] = {{"x", c.x_label}, {"y", c.y_label}, {"points", pts}};
  }
  return doc.dump(2) + "\n";
}

std::string Report::to_table(const std::vector<std::string>& percent_keys) const {
  std::size_t width = 6;
  for (const auto& [k, v] : metrics) width = std::max(width, k.size());
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  const std::string rule(width + 16, '-');
  os << rule << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s  %12s\n", static_cast<int>(width), "metric", "value");
  os << buf << rule << '\n';
  for (const auto& [k, v] : metrics) {
    const bool pct = std::find(percent_keys.begin(), percent_keys.end(), k) != percent_keys.end();
    if (pct) {
      std::snprintf(buf, sizeof buf, "%-*s  %11.2f%%\n", static_cast<int>(width), k.c_str(), 100.0 * v);
    } else {
      std::snprintf(buf, sizeof buf, "%-*s  %12.6g\n", static_cast<int>(width), k.c_str(), v);
    }
    os << buf;
  }
  os << rule << '\n';
  return os.str();
}

std::string curve_csv(const Curve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << curve.x_label << ',' << curve.y_label << '\n';
  for (const auto& [x, y] : curve.points) os << x << ',' << y << '\n';
  return os.str();
}

Curve det_curve(const DetCurve& curve) {
  Curve c{"fppi", "miss_rate", {}};
  for (const auto& p : curve.points) c.points.emplace_back(p.fppi, p.miss_rate);
  return c;
}

Curve roc_points(const std::vector<CalibrationResult>& results) {
  Curve c{"far", "tpr", {}};
  for (const auto& r : results) c.points.emplace_back(r.achieved_far, r.tpr);
  return c;
}

}  // namespace palmroi
