#include "asckit/eval_report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asckit/corpus.hpp"

using nlohmann::json;

namespace asckit {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

EvalReport tally_report(const std::vector<int>& truths,
                        const std::vector<int>& predictions) {
  if (truths.size() != predictions.size()) {
    throw validation_error("evaluate: truth/prediction length mismatch");
  }
  if (truths.empty()) throw validation_error("evaluate: empty test set");

  EvalReport r;
  for (size_t i = 0; i < truths.size(); ++i) {
    const int t = truths[i], p = predictions[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) {
      throw validation_error("evaluate: class index out of range");
    }
    r.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)]++;
  }

  double acc_sum = 0.0;
  int present = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    int64_t row = 0;
    for (int j = 0; j < kNumClasses; ++j) row += r.confusion[static_cast<size_t>(k)][static_cast<size_t>(j)];
    if (row == 0) {
      r.class_accuracy[static_cast<size_t>(k)] = -1.0;
      r.warnings.push_back(std::string("class absent from test set: ") +
                           std::string(scene_labels()[static_cast<size_t>(k)]));
      continue;
    }
    const double acc = static_cast<double>(r.confusion[static_cast<size_t>(k)][static_cast<size_t>(k)]) /
                       static_cast<double>(row);
    r.class_accuracy[static_cast<size_t>(k)] = acc;
    acc_sum += acc;
    ++present;
  }
  r.macro_accuracy = present > 0 ? acc_sum / present : 0.0;
  return r;
}

json EvalReport::to_json() const {
  json conf = json::array();
  for (const auto& row : confusion) {
    conf.push_back(std::vector<int64_t>(row.begin(), row.end()));
  }
  std::vector<std::string> classes;
  for (auto l : scene_labels()) classes.emplace_back(l);
  return json{{"system", system},
              {"split_fraction", split_fraction},
              {"classes", classes},
              {"confusion", conf},
              {"class_accuracy", std::vector<double>(class_accuracy.begin(), class_accuracy.end())},
              {"macro_accuracy", macro_accuracy},
              {"warnings", warnings}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.system = j.value("system", "");
  r.split_fraction = j.value("split_fraction", 100);
  const auto conf = j.at("confusion");
  if (conf.size() != kNumClasses) throw validation_error("eval report: bad confusion size");
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) {
      r.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)] = conf[static_cast<size_t>(t)][static_cast<size_t>(p)].get<int64_t>();
    }
  }
  const auto acc = j.at("class_accuracy").get<std::vector<double>>();
  if (acc.size() != kNumClasses) throw validation_error("eval report: bad class_accuracy size");
  std::copy(acc.begin(), acc.end(), r.class_accuracy.begin());
  r.macro_accuracy = j.at("macro_accuracy").get<double>();
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("classes")) {
    const auto classes = j.at("classes").get<std::vector<std::string>>();
    for (int k = 0; k < kNumClasses; ++k) {
      if (classes[static_cast<size_t>(k)] != scene_labels()[static_cast<size_t>(k)]) {
        throw validation_error("eval report: class vocabulary mismatch");
      }
    }
  }
  return r;
}

void EvalReport::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw validation_error("cannot write eval report: " + path);
  f << to_json().dump(2) << '\n';
}

EvalReport EvalReport::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw validation_error("eval report not found: " + path);
  try {
    return from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw validation_error("eval report JSON error in " + path + ": " + e.what());
  }
}

std::string macro_table_csv(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw validation_error("report: need at least one eval report");
  std::set<int> splits;
  std::vector<std::string> systems;  // first-seen order
  std::map<std::pair<int, std::string>, double> cells;
  for (const auto& r : reports) {
    splits.insert(r.split_fraction);
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) {
      systems.push_back(r.system);
    }
    cells[{r.split_fraction, r.system}] = r.macro_accuracy;
  }

  std::ostringstream out;
  out << "train_split";
  for (const auto& s : systems) out << ',' << s;
  out << '\n';
  for (int split : splits) {
    out << split << '%';
    for (const auto& s : systems) {
      out << ',';
      auto it = cells.find({split, s});
      if (it != cells.end()) out << fmt(it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string class_accuracy_csv(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw validation_error("report: need at least one eval report");
  std::ostringstream out;
  out << "class";
  for (const auto& r : reports) {
    out << ',' << r.system << "@" << r.split_fraction << '%';
  }
  out << '\n';
  for (int k = 0; k < kNumClasses; ++k) {
    out << scene_labels()[static_cast<size_t>(k)];
    for (const auto& r : reports) {
      out << ',';
      if (r.class_accuracy[static_cast<size_t>(k)] >= 0.0) {
        out << fmt(r.class_accuracy[static_cast<size_t>(k)]);
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string class_accuracy_svg(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw validation_error("report: need at least one eval report");
  const int n_series = static_cast<int>(reports.size());
  const int bar_w = 14, group_gap = 18;
  const int group_w = n_series * bar_w + group_gap;
  const int plot_w = kNumClasses * group_w;
  const int plot_h = 240, margin_l = 50, margin_b = 90, margin_t = 30;
  const int width = margin_l + plot_w + 20;
  const int height = margin_t + plot_h + margin_b;

  static const char* palette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                                  "#956cb4", "#8c613c", "#dc7ec0", "#797979"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axis and gridlines at 0/25/50/75/100%.
  for (int g = 0; g <= 4; ++g) {
    const double frac = g / 4.0;
    const int y = margin_t + static_cast<int>(plot_h * (1.0 - frac));
    svg << "<line x1=\"" << margin_l << "\" y1=\"" << y << "\" x2=\""
        << margin_l + plot_w << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << margin_l - 6 << "\" y=\"" << y + 4
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
        << static_cast<int>(frac * 100) << "%</text>\n";
  }
  for (int k = 0; k < kNumClasses; ++k) {
    const int gx = margin_l + k * group_w;
    for (int s = 0; s < n_series; ++s) {
      const double acc = reports[static_cast<size_t>(s)].class_accuracy[static_cast<size_t>(k)];
      if (acc < 0.0) continue;
      const int h = static_cast<int>(plot_h * acc);
      svg << "<rect x=\"" << gx + s * bar_w << "\" y=\"" << margin_t + plot_h - h
          << "\" width=\"" << bar_w - 2 << "\" height=\"" << h << "\" fill=\""
          << palette[s % 8] << "\"/>\n";
    }
    svg << "<text x=\"" << gx + n_series * bar_w / 2 << "\" y=\""
        << margin_t + plot_h + 12
        << "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"start\""
        << " transform=\"rotate(45 " << gx + n_series * bar_w / 2 << ","
        << margin_t + plot_h + 12 << ")\">"
        << scene_labels()[static_cast<size_t>(k)] << "</text>\n";
  }
  // Legend.
  for (int s = 0; s < n_series; ++s) {
    const int y = margin_t + s * 16;
    svg << "<rect x=\"" << margin_l + plot_w - 150 << "\" y=\"" << y
        << "\" width=\"12\" height=\"12\" fill=\"" << palette[s % 8] << "\"/>\n";
    svg << "<text x=\"" << margin_l + plot_w - 134 << "\" y=\"" << y + 10
        << "\" font-size=\"11\" font-family=\"sans-serif\">"
        << reports[static_cast<size_t>(s)].system << " @"
        << reports[static_cast<size_t>(s)].split_fraction << "%</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace asckit
