#pragma once

// SVG rendering of a series (first column) above its statistic profiles, with
// the detection threshold and vertical markers at detected change points.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cecpd/io.hpp"

namespace cecpd {

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Panel {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;

  double x(double v) const { return left + (v - x_min) / (x_max - x_min) * width; }
  double y(double v) const { return top + height - (v - y_min) / (y_max - y_min) * height; }
};

inline void pad_range(double& lo, double& hi) {
  if (hi <= lo) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

}  // namespace detail

inline std::string render_svg(const TimeSeries& ts, const DetectionReport& report) {
  constexpr double width = 900, height = 560, margin_left = 70, margin_right = 20;
  const double plot_w = width - margin_left - margin_right;
  const std::size_t n = ts.length();

  auto axis_value = [&](std::size_t i) { return ts.labels ? (*ts.labels)[i] : static_cast<double>(i + 1); };
  const double x_min = axis_value(0);
  const double x_max = n > 1 ? axis_value(n - 1) : x_min + 1.0;

  double s_lo = std::numeric_limits<double>::infinity();
  double s_hi = -s_lo;
  for (std::size_t i = 0; i < n; ++i) {
    s_lo = std::min(s_lo, ts.values(i, 0));
    s_hi = std::max(s_hi, ts.values(i, 0));
  }
  detail::pad_range(s_lo, s_hi);

  double t_lo = std::min(0.0, report.config.threshold);
  double t_hi = report.config.threshold;
  for (const auto& prof : report.profiles) {
    for (const auto& p : prof.stats) {
      t_lo = std::min(t_lo, p.statistic);
      t_hi = std::max(t_hi, p.statistic);
    }
  }
  detail::pad_range(t_lo, t_hi);

  const detail::Panel series{margin_left, 40, plot_w, 220, x_min, x_max, s_lo, s_hi};
  const detail::Panel stats{margin_left, 310, plot_w, 200, x_min, x_max, t_lo, t_hi};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << margin_left << "\" y=\"24\" font-size=\"15\">" << report.series_name
      << ": series and two-sample statistic</text>\n";

  auto frame = [&](const detail::Panel& p, double lo, double hi, const std::string& label) {
    svg << "<rect x=\"" << detail::fmt2(p.left) << "\" y=\"" << detail::fmt2(p.top) << "\" width=\""
        << detail::fmt2(p.width) << "\" height=\"" << detail::fmt2(p.height)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      svg << "<text x=\"" << detail::fmt2(p.left - 6) << "\" y=\"" << detail::fmt2(p.y(v) + 4)
          << "\" text-anchor=\"end\">" << detail::fmt_tick(v) << "</text>\n";
    }
    svg << "<text x=\"14\" y=\"" << detail::fmt2(p.top + p.height / 2) << "\" transform=\"rotate(-90 14 "
        << detail::fmt2(p.top + p.height / 2) << ")\" text-anchor=\"middle\">" << label << "</text>\n";
  };
  frame(series, s_lo, s_hi, ts.column_names.empty() ? "value" : ts.column_names.front());
  frame(stats, t_lo, t_hi, "statistic (nats)");
  for (int t = 0; t <= 5; ++t) {
    const double v = x_min + (x_max - x_min) * t / 5.0;
    svg << "<text x=\"" << detail::fmt2(stats.x(v)) << "\" y=\"" << detail::fmt2(stats.top + stats.height + 18)
        << "\" text-anchor=\"middle\">" << detail::fmt_tick(v) << "</text>\n";
  }

  svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.2\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    svg << (i ? " " : "") << detail::fmt2(series.x(axis_value(i))) << ',' << detail::fmt2(series.y(ts.values(i, 0)));
  }
  svg << "\"/>\n";

  // Profile entries sit at the candidate change index.
  for (const auto& prof : report.profiles) {
    if (prof.stats.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"#2e8b57\" stroke-width=\"1.2\" points=\"";
    for (std::size_t s = 0; s < prof.stats.size(); ++s) {
      const auto& p = prof.stats[s];
      svg << (s ? " " : "") << detail::fmt2(stats.x(axis_value(p.split + 1))) << ','
          << detail::fmt2(stats.y(p.statistic));
    }
    svg << "\"/>\n";
  }

  const double thr_y = stats.y(report.config.threshold);
  svg << "<line x1=\"" << detail::fmt2(stats.left) << "\" y1=\"" << detail::fmt2(thr_y) << "\" x2=\""
      << detail::fmt2(stats.left + stats.width) << "\" y2=\"" << detail::fmt2(thr_y)
      << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n";
  svg << "<text x=\"" << detail::fmt2(stats.left + stats.width - 4) << "\" y=\"" << detail::fmt2(thr_y - 4)
      << "\" text-anchor=\"end\" fill=\"#666\">threshold " << detail::fmt_tick(report.config.threshold)
      << "</text>\n";

  for (const auto& p : report.points) {
    const double x = series.x(axis_value(p.index));
    svg << "<line x1=\"" << detail::fmt2(x) << "\" y1=\"" << detail::fmt2(series.top) << "\" x2=\""
        << detail::fmt2(x) << "\" y2=\"" << detail::fmt2(stats.top + stats.height)
        << "\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << detail::fmt2(x + 4) << "\" y=\"" << detail::fmt2(series.top + 14)
        << "\" fill=\"#c0392b\">" << detail::fmt_tick(axis_value(p.index)) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cecpd
