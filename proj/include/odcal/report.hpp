#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "odcal/calibrators.hpp"
#include "odcal/core.hpp"
#include "odcal/metrics.hpp"

namespace odcal {

namespace detail {

/// Fixed 6-significant-digit formatting so re-exports are byte-identical.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[i % 6];
}

/// Tiny SVG chart: fixed frame, linear axes, ticks, polylines and dots.
class svg_canvas {
 public:
  svg_canvas(double x_min, double x_max, double y_min, double y_max, std::string x_label,
             std::string y_label)
      : x_min_(x_min), x_max_(x_max > x_min ? x_max : x_min + 1.0),
        y_min_(y_min), y_max_(y_max > y_min ? y_max : y_min + 1.0) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
             "viewBox=\"0 0 640 480\">\n";
    body_ += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    axes(std::move(x_label), std::move(y_label));
  }

  double px(double x) const { return left + (x - x_min_) / (x_max_ - x_min_) * (right - left); }
  double py(double y) const { return bottom - (y - y_min_) / (y_max_ - y_min_) * (bottom - top); }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                bool dashed = false) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"";
    if (dashed) body_ += " stroke-dasharray=\"6,4\"";
    body_ += " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) body_ += " ";
      body_ += fmt6(px(xs[i])) + "," + fmt6(py(ys[i]));
    }
    body_ += "\"/>\n";
  }

  void dots(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      body_ += "<circle cx=\"" + fmt6(px(xs[i])) + "\" cy=\"" + fmt6(py(ys[i])) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
  }

  void legend_entry(std::size_t index, const std::string& label, const std::string& color) {
    double y = top + 16.0 + 18.0 * static_cast<double>(index);
    body_ += "<rect x=\"" + fmt6(right - 150.0) + "\" y=\"" + fmt6(y - 9.0) +
             "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    body_ += "<text class=\"legend\" x=\"" + fmt6(right - 133.0) + "\" y=\"" + fmt6(y + 1.0) +
             "\" font-size=\"12\">" + label + "</text>\n";
  }

  std::string finish() const { return body_ + "</svg>\n"; }

  static constexpr double left = 70.0, right = 610.0, top = 30.0, bottom = 430.0;

 private:
  void axes(std::string x_label, std::string y_label) {
    body_ += "<line x1=\"" + fmt6(left) + "\" y1=\"" + fmt6(bottom) + "\" x2=\"" + fmt6(right) +
             "\" y2=\"" + fmt6(bottom) + "\" stroke=\"black\"/>\n";
    body_ += "<line x1=\"" + fmt6(left) + "\" y1=\"" + fmt6(bottom) + "\" x2=\"" + fmt6(left) +
             "\" y2=\"" + fmt6(top) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      double fx = x_min_ + (x_max_ - x_min_) * i / 5.0;
      double fy = y_min_ + (y_max_ - y_min_) * i / 5.0;
      body_ += "<text x=\"" + fmt6(px(fx)) + "\" y=\"" + fmt6(bottom + 16.0) +
               "\" font-size=\"10\" text-anchor=\"middle\">" + fmt6(fx) + "</text>\n";
      body_ += "<text x=\"" + fmt6(left - 6.0) + "\" y=\"" + fmt6(py(fy) + 3.0) +
               "\" font-size=\"10\" text-anchor=\"end\">" + fmt6(fy) + "</text>\n";
    }
    body_ += "<text x=\"" + fmt6((left + right) / 2.0) + "\" y=\"466\" font-size=\"12\" "
             "text-anchor=\"middle\">" + x_label + "</text>\n";
    body_ += "<text x=\"14\" y=\"" + fmt6((top + bottom) / 2.0) + "\" font-size=\"12\" "
             "text-anchor=\"middle\" transform=\"rotate(-90 14 " + fmt6((top + bottom) / 2.0) +
             ")\">" + y_label + "</text>\n";
  }

  double x_min_, x_max_, y_min_, y_max_;
  std::string body_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << content;
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace detail

/// Long-format convergence CSV plus an SVG of best-so-far nRMSE against
/// cumulative simulation calls, one series per history.
inline void export_convergence(const std::vector<calibration_history>& histories,
                               const std::string& csv_path, const std::string& svg_path) {
  if (histories.empty()) throw invalid_input_error("export_convergence: no histories");
  std::string csv = "method,iteration,sim_calls,objective,nrmse\n";
  double x_max = 1.0, y_max = 0.0;
  for (const auto& h : histories) {
    for (const auto& rec : h.records) {
      csv += h.method + "," + std::to_string(rec.iteration) + "," + std::to_string(rec.sim_calls) + "," +
             detail::fmt6(rec.objective) + "," + detail::fmt6(rec.nrmse) + "\n";
      x_max = std::max(x_max, static_cast<double>(rec.sim_calls));
      y_max = std::max(y_max, rec.nrmse);
    }
  }
  detail::write_text_file(csv_path, csv);

  detail::svg_canvas canvas(0.0, x_max, 0.0, y_max * 1.05 + 1e-12, "simulation calls",
                            "best-so-far nRMSE [%]");
  for (std::size_t s = 0; s < histories.size(); ++s) {
    std::vector<double> xs, ys;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : histories[s].records) {
      best = std::min(best, rec.nrmse);
      xs.push_back(static_cast<double>(rec.sim_calls));
      ys.push_back(best);
    }
    canvas.polyline(xs, ys, detail::series_color(s));
    canvas.legend_entry(s, histories[s].method, detail::series_color(s));
  }
  detail::write_text_file(svg_path, canvas.finish());
}

/// Field-vs-simulated scatter CSV plus an SVG with the dashed y = x diagonal.
inline void export_scatter(const fit_report& report, const std::string& csv_path,
                           const std::string& svg_path) {
  if (report.edge_ids.empty()) throw invalid_input_error("export_scatter: empty report");
  if (report.edge_ids.size() != report.field_counts.size() ||
      report.edge_ids.size() != report.simulated_counts.size())
    throw invalid_input_error("export_scatter: ragged report");
  std::string csv = "edge_id,field_count,simulated_count\n";
  double v_max = 0.0;
  for (std::size_t i = 0; i < report.edge_ids.size(); ++i) {
    csv += std::to_string(report.edge_ids[i]) + "," + detail::fmt6(report.field_counts[i]) + "," +
           detail::fmt6(report.simulated_counts[i]) + "\n";
    v_max = std::max({v_max, report.field_counts[i], report.simulated_counts[i]});
  }
  detail::write_text_file(csv_path, csv);

  double hi = v_max * 1.05 + 1e-12;
  detail::svg_canvas canvas(0.0, hi, 0.0, hi, "field count [veh/hr]", "simulated count [veh/hr]");
  canvas.polyline({0.0, hi}, {0.0, hi}, "#888888", /*dashed=*/true);
  canvas.dots(report.field_counts, report.simulated_counts, detail::series_color(0));
  detail::write_text_file(svg_path, canvas.finish());
}

}  // namespace odcal
