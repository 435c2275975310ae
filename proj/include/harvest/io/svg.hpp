#pragma once

// Line chart with shaded 95% bands, written as a standalone SVG 1.1 document.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "harvest/io/csv.hpp"
#include "harvest/stats.hpp"

namespace harvest::io {

struct ChartPoint {
  double x = 0.0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ChartSeries {
  std::string name;
  std::vector<ChartPoint> points;  // ascending x
};

/// Mean and interval of a metric per (series, axis value). One run gives a
/// zero-width band.
inline std::vector<ChartSeries> summarize_sweep(const std::vector<SweepRow>& rows, const std::string& metric) {
  if (metric != "efficiency" && metric != "nonproductive") {
    throw DataError("unknown metric '" + metric + "'");
  }
  std::map<std::string, std::map<double, std::vector<double>>> groups;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!groups.count(r.series)) order.push_back(r.series);
    groups[r.series][r.value].push_back(metric == "efficiency" ? r.efficiency : r.nonproductive);
  }
  std::vector<ChartSeries> out;
  for (const auto& name : order) {
    ChartSeries s{name, {}};
    for (const auto& [x, ys] : groups[name]) {
      ChartPoint p{x, ys[0], ys[0], ys[0]};
      if (ys.size() >= 2) {
        const auto sum = stats::summarize(ys);
        p = {x, sum.mean, sum.ci95_low, sum.ci95_high};
      }
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

inline std::string tick_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Round step for roughly `target` intervals across span.
inline double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

inline std::string render_chart(const std::vector<ChartSeries>& series, const std::string& title,
                                const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw DataError("nothing to plot");
  constexpr double W = 800.0;
  constexpr double H = 500.0;
  constexpr double left = 80.0;
  constexpr double right = 170.0;
  constexpr double top = 50.0;
  constexpr double bottom = 60.0;
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.lo);
      y1 = std::max(y1, p.hi);
    }
  }
  if (x1 == x0) {
    x0 -= 1.0;
    x1 += 1.0;
  }
  if (y1 == y0) {
    const double pad = y0 == 0.0 ? 1.0 : std::abs(y0) * 0.05;
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = (y1 - y0) * 0.08;
    y0 -= pad;
    y1 += pad;
  }
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  using detail::num;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\" "
        "viewBox=\"0 0 800 500\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n"
     << "<text x=\"" << num(left + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
     << detail::xml_escape(title) << "</text>\n";

  // Axes and ticks.
  os << "<g stroke=\"#333\" fill=\"none\">\n"
     << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
     << num(top + ph) << "\"/>\n"
     << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
     << num(top + ph) << "\"/>\n</g>\n";
  const double xs = detail::nice_step(x1 - x0, 8);
  for (double x = std::ceil(x0 / xs) * xs; x <= x1 + 1e-9 * xs; x += xs) {
    os << "<line x1=\"" << num(sx(x)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(x)) << "\" y2=\""
       << num(top + ph + 5) << "\" stroke=\"#333\"/>\n"
       << "<text x=\"" << num(sx(x)) << "\" y=\"" << num(top + ph + 20) << "\" text-anchor=\"middle\">"
       << detail::tick_label(x) << "</text>\n";
  }
  const double ys = detail::nice_step(y1 - y0, 6);
  for (double y = std::ceil(y0 / ys) * ys; y <= y1 + 1e-9 * ys; y += ys) {
    const double yy = std::abs(y) < 1e-12 * ys ? 0.0 : y;
    os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(yy)) << "\" x2=\"" << num(left + pw)
       << "\" y2=\"" << num(sy(yy)) << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(yy) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(yy) << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 15) << "\" text-anchor=\"middle\">"
     << detail::xml_escape(x_label) << "</text>\n"
     << "<text transform=\"translate(20," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % 6];
    // Band: upper edge forward, lower edge back.
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : s.points) os << num(sx(p.x)) << ',' << num(sy(p.hi)) << ' ';
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) os << num(sx(it->x)) << ',' << num(sy(it->lo)) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : s.points) os << num(sx(p.x)) << ',' << num(sy(p.mean)) << ' ';
    os << "\"/>\n";
    for (const auto& p : s.points) {
      os << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.mean)) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    const double ly = top + 10 + 22.0 * static_cast<double>(k);
    os << "<rect x=\"" << num(W - right + 20) << "\" y=\"" << num(ly - 8) << "\" width=\"14\" height=\"10\" fill=\""
       << color << "\"/>\n"
       << "<text x=\"" << num(W - right + 40) << "\" y=\"" << num(ly + 1) << "\">" << detail::xml_escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace harvest::io
