#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace acgan::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[k % std::size(colors)];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double width = 860, height = 480, left = 70, right = 190, top = 40, bottom = 50;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline Frame fit(const std::vector<Series>& series) {
  Frame f;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const Series& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) {
      if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  f.x0 = xmin;
  f.x1 = xmax;
  f.y0 = ymin - pad;
  f.y1 = ymax + pad;
  return f;
}

inline void axes(std::ostream& out, const Frame& f, const std::string& title, const std::string& xlabel,
                 const std::string& ylabel) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(f.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  const double bx = f.px(f.x0), by = f.py(f.y0);
  out << "<line x1=\"" << num(bx) << "\" y1=\"" << num(by) << "\" x2=\"" << num(f.px(f.x1)) << "\" y2=\"" << num(by)
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << num(bx) << "\" y1=\"" << num(by) << "\" x2=\"" << num(bx) << "\" y2=\"" << num(f.py(f.y1))
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 5.0, yv = f.y0 + (f.y1 - f.y0) * k / 5.0;
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(by + 18) << "\" text-anchor=\"middle\">" << num(xv)
        << "</text>\n"
        << "<text x=\"" << num(bx - 6) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
        << "</text>\n"
        << "<line x1=\"" << num(bx) << "\" y1=\"" << num(f.py(yv)) << "\" x2=\"" << num(f.px(f.x1)) << "\" y2=\""
        << num(f.py(yv)) << "\" stroke=\"#eeeeee\"/>\n";
  }
  out << "<text x=\"" << num((bx + f.px(f.x1)) / 2) << "\" y=\"" << num(f.height - 10)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
      << "<text x=\"16\" y=\"" << num((by + f.py(f.y1)) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num((by + f.py(f.y1)) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

inline void legend(std::ostream& out, const Frame& f, const std::vector<Series>& series, bool markers) {
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double x = f.width - f.right + 15, y = f.top + 10 + 18.0 * static_cast<double>(k);
    if (markers) {
      out << "<circle cx=\"" << num(x + 10) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\"" << palette(k) << "\"/>\n";
    } else {
      out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20) << "\" y2=\"" << num(y)
          << "\" stroke=\"" << palette(k) << "\" stroke-width=\"2\"" << (series[k].dashed ? " stroke-dasharray=\"5,3\"" : "")
          << "/>\n";
    }
    out << "<text x=\"" << num(x + 26) << "\" y=\"" << num(y + 4) << "\">" << escape(series[k].label) << "</text>\n";
  }
}

inline void line_chart(std::ostream& out, const std::vector<Series>& series, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel) {
  const Frame f = fit(series);
  axes(out, f, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.5\""
        << (series[k].dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      out << num(f.px(series[k].x[i])) << ',' << num(f.py(series[k].y[i])) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, f, series, false);
  out << "</svg>\n";
}

inline void scatter_chart(std::ostream& out, const std::vector<Series>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel) {
  const Frame f = fit(series);
  axes(out, f, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      out << "<circle cx=\"" << num(f.px(series[k].x[i])) << "\" cy=\"" << num(f.py(series[k].y[i]))
          << "\" r=\"2.5\" fill=\"" << palette(k) << "\" fill-opacity=\"0.6\"/>\n";
    }
  }
  legend(out, f, series, true);
  out << "</svg>\n";
}

}  // namespace acgan::svg
