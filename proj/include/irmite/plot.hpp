#pragma once

// Standalone SVG line charts of sweep results: one polyline per estimator,
// mean sqrt(PEHE) with +/- one standard deviation error bars over reps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "irmite/error.hpp"
#include "irmite/harness.hpp"

namespace irmite {

enum class PlotKind { AccuracySweep, DimensionSweep };

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> x, mean, std;
};

}  // namespace detail

inline std::string plot_svg(const std::vector<ResultRecord>& records, PlotKind kind) {
  if (records.empty()) throw Error(ErrorCode::SchemaError, "no result rows to plot");
  const auto summary = summarize(records);

  std::vector<detail::Series> series;
  for (const auto& row : summary) {
    if (row.n_ok == 0) continue;
    double x = row.x_value;
    if (kind == PlotKind::AccuracySweep) {
      if (!row.mean_accuracy)
        throw Error(ErrorCode::SchemaError, "accuracy plot needs measured_accuracy values");
      x = *row.mean_accuracy;
    }
    auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.name == row.estimator; });
    if (it == series.end()) {
      series.push_back({row.estimator, {}, {}, {}});
      it = series.end() - 1;
    }
    it->x.push_back(x);
    it->mean.push_back(row.mean);
    it->std.push_back(row.std);
  }
  if (series.empty()) throw Error(ErrorCode::SchemaError, "no successful rows to plot");

  for (auto& s : series) {
    std::vector<std::size_t> idx(s.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
    detail::Series sorted{s.name, {}, {}, {}};
    for (auto i : idx) {
      sorted.x.push_back(s.x[i]);
      sorted.mean.push_back(s.mean[i]);
      sorted.std.push_back(s.std[i]);
    }
    s = std::move(sorted);
  }

  double x_lo = series[0].x[0], x_hi = x_lo, y_lo = 0.0, y_hi = 0.0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_hi = std::max(y_hi, s.mean[i] + s.std[i]);
    }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  y_hi *= 1.05;

  constexpr double kWidth = 720, kHeight = 460, kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const std::string title = kind == PlotKind::AccuracySweep ? "sqrt(PEHE) vs treatment group classification accuracy"
                                                            : "sqrt(PEHE) vs feature dimension d";
  const std::string x_label = kind == PlotKind::AccuracySweep ? "classification accuracy" : "d";

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << detail::svg_num(kLeft + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << title << "</text>\n";

  // axes and ticks
  os << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
     << kTop + plot_h << "\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
     << "\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / kTicks;
    const double yv = y_lo + (y_hi - y_lo) * i / kTicks;
    os << "<line x1=\"" << detail::svg_num(px(xv)) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
       << detail::svg_num(px(xv)) << "\" y2=\"" << kTop + plot_h + 5 << "\"/>\n"
       << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << detail::svg_num(py(yv)) << "\" x2=\"" << kLeft << "\" y2=\""
       << detail::svg_num(py(yv)) << "\"/>\n";
  }
  os << "</g>\n<g fill=\"black\">\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / kTicks;
    const double yv = y_lo + (y_hi - y_lo) * i / kTicks;
    os << "<text x=\"" << detail::svg_num(px(xv)) << "\" y=\"" << kTop + plot_h + 18
       << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n"
       << "<text x=\"" << kLeft - 8 << "\" y=\"" << detail::svg_num(py(yv) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << detail::svg_num(kLeft + plot_w / 2) << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
     << "<text x=\"20\" y=\"" << detail::svg_num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << detail::svg_num(kTop + plot_h / 2) << ")\">sqrt(PEHE)</text>\n</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    os << "<g class=\"series\" data-estimator=\"" << s.name << "\">\n<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << (i ? " " : "") << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.mean[i]));
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = std::max(y_lo, s.mean[i] - s.std[i]);
      const double hi = s.mean[i] + s.std[i];
      os << "<line stroke=\"" << color << "\" x1=\"" << detail::svg_num(px(s.x[i])) << "\" y1=\""
         << detail::svg_num(py(lo)) << "\" x2=\"" << detail::svg_num(px(s.x[i])) << "\" y2=\""
         << detail::svg_num(py(hi)) << "\"/>\n"
         << "<circle fill=\"" << color << "\" cx=\"" << detail::svg_num(px(s.x[i])) << "\" cy=\""
         << detail::svg_num(py(s.mean[i])) << "\" r=\"3\"/>\n";
    }
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    os << "<line stroke=\"" << color << "\" stroke-width=\"2\" x1=\"" << kLeft + plot_w + 15 << "\" y1=\""
       << detail::svg_num(ly) << "\" x2=\"" << kLeft + plot_w + 40 << "\" y2=\"" << detail::svg_num(ly) << "\"/>\n"
       << "<text x=\"" << kLeft + plot_w + 46 << "\" y=\"" << detail::svg_num(ly + 4) << "\">" << s.name
       << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::vector<ResultRecord> load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_results_csv(in);
}

/// Renders the CSV at csv_path; kind is inferred from the sweep column when
/// not given.
inline std::string plot_csv(const std::string& csv_path, std::optional<PlotKind> kind = std::nullopt) {
  const auto records = load_results_csv(csv_path);
  if (records.empty()) throw Error(ErrorCode::SchemaError, csv_path + " has a header but no data rows");
  const PlotKind k = kind.value_or(records.front().sweep == "accuracy" ? PlotKind::AccuracySweep
                                                                       : PlotKind::DimensionSweep);
  return plot_svg(records, k);
}

}  // namespace irmite
