#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ris_sense/common.hpp"

namespace ris_sense::svg {

// Deterministic, dependency-free SVG writers. Every plot also gets a CSV twin
// with the raw numbers so outputs can be diffed and regression-tested.

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Canvas {
  double width = 720, height = 480;
  double ml = 60, mr = 20, mt = 30, mb = 45;  // margins
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;      // data ranges

  double px(double x) const {
    return ml + (x - x0) / (x1 - x0) * (width - ml - mr);
  }
  double py(double y) const {
    return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb);
  }
};

inline void open_svg(std::ofstream& out, const Canvas& c, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width
      << "\" height=\"" << c.height << "\" viewBox=\"0 0 " << c.width << " "
      << c.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << c.width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
}

inline void axes(std::ofstream& out, const Canvas& c, const std::string& xlabel,
                 const std::string& ylabel) {
  out << "<rect x=\"" << c.ml << "\" y=\"" << c.mt << "\" width=\""
      << c.width - c.ml - c.mr << "\" height=\"" << c.height - c.mt - c.mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = c.x0 + (c.x1 - c.x0) * i / 4.0;
    const double yv = c.y0 + (c.y1 - c.y0) * i / 4.0;
    out << "<text x=\"" << c.px(xv) << "\" y=\"" << c.height - c.mb + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(xv) << "</text>\n"
        << "<text x=\"" << c.ml - 6 << "\" y=\"" << c.py(yv) + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(yv) << "</text>\n";
  }
  out << "<text x=\"" << (c.ml + c.width - c.mr) / 2 << "\" y=\""
      << c.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xlabel << "</text>\n"
      << "<text x=\"14\" y=\"" << (c.mt + c.height - c.mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 14 " << (c.mt + c.height - c.mb) / 2 << ")\">"
      << ylabel << "</text>\n";
}

inline void polyline(std::ofstream& out, const Canvas& c,
                     const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i)
    out << fmt(c.px(x[i])) << "," << fmt(c.py(std::clamp(y[i], c.y0, c.y1))) << " ";
  out << "\"/>\n";
}

inline std::string heat_color(double t) {
  // Simple blue->red ramp.
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255 * t);
  const int b = static_cast<int>(255 * (1.0 - t));
  const int g = static_cast<int>(80 * (1.0 - std::abs(2 * t - 1)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  std::size_t rows = 0;
  for (const auto& c : columns) rows = std::max(rows, c.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (r < columns[c].size()) out << detail::fmt(columns[c][r]);
      out << (c + 1 < columns.size() ? "," : "\n");
    }
  }
}

/// Single-curve line plot (e.g. a radiation pattern cut in dB vs angle).
inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<double>& x,
                            const std::vector<double>& y, double ymin,
                            double ymax) {
  if (x.size() != y.size() || x.empty())
    throw DataError("plot: x/y size mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  detail::Canvas c;
  c.x0 = x.front();
  c.x1 = x.back();
  c.y0 = ymin;
  c.y1 = ymax;
  detail::open_svg(out, c, title);
  detail::axes(out, c, xlabel, ylabel);
  detail::polyline(out, c, x, y, "#1f77b4");
  out << "</svg>\n";
}

/// Multi-curve plot (loss curves, coherence traces).
inline void write_curves(const std::string& path, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel,
                         const std::vector<std::vector<double>>& curves,
                         const std::vector<std::string>& names) {
  if (curves.empty() || curves.size() != names.size())
    throw DataError("plot: curve/name mismatch");
  double lo = 1e300, hi = -1e300;
  std::size_t n = 0;
  for (const auto& cu : curves) {
    n = std::max(n, cu.size());
    for (auto v : cu) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n < 2) throw DataError("plot: need at least two points");
  if (hi <= lo) hi = lo + 1.0;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  detail::Canvas c;
  c.x0 = 0;
  c.x1 = static_cast<double>(n - 1);
  c.y0 = lo;
  c.y1 = hi;
  detail::open_svg(out, c, title);
  detail::axes(out, c, xlabel, ylabel);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t k = 0; k < curves.size(); ++k) {
    std::vector<double> xs(curves[k].size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    detail::polyline(out, c, xs, curves[k], colors[k % 4]);
    out << "<text x=\"" << c.width - c.mr - 8 << "\" y=\"" << c.mt + 16 + 14 * k
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << colors[k % 4] << "\">" << names[k] << "</text>\n";
  }
  out << "</svg>\n";
}

/// Two-panel heatmap (magnitude and phase of an S21 record), row-major data.
inline void write_heatmap_pair(const std::string& path, const std::string& title,
                               int rows, int cols,
                               const std::vector<double>& magnitude,
                               const std::vector<double>& phase) {
  if (magnitude.size() != static_cast<std::size_t>(rows) * cols ||
      phase.size() != magnitude.size())
    throw DataError("heatmap: dimension mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  // Downsample to at most 200x200 cells per panel to keep files small.
  const int dr = std::max(1, rows / 200), dc = std::max(1, cols / 200);
  const int pr = (rows + dr - 1) / dr, pc = (cols + dc - 1) / dc;
  const double cell = 2.0;
  const double panel_w = pc * cell, panel_h = pr * cell;
  const double width = 2 * panel_w + 60, height = panel_h + 60;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  const auto panel = [&](const std::vector<double>& data, double ox,
                         const std::string& label) {
    double lo = 1e300, hi = -1e300;
    for (auto v : data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    for (int r = 0; r < pr; ++r)
      for (int c2 = 0; c2 < pc; ++c2) {
        const std::size_t i =
            static_cast<std::size_t>(std::min(rows - 1, r * dr)) * cols +
            std::min(cols - 1, c2 * dc);
        out << "<rect x=\"" << ox + c2 * cell << "\" y=\"" << 30 + r * cell
            << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
            << detail::heat_color((data[i] - lo) / (hi - lo)) << "\"/>\n";
      }
    out << "<text x=\"" << ox + panel_w / 2 << "\" y=\"" << 30 + panel_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << label << "</text>\n";
  };
  panel(magnitude, 20, "magnitude");
  panel(phase, 40 + panel_w, "phase");
  out << "</svg>\n";
}

/// 3x3 confusion-matrix figure with counts.
inline void write_confusion(const std::string& path, const std::string& title,
                            const std::array<std::array<int, 3>, 3>& confusion,
                            const std::array<std::string, 3>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const double cell = 90, ox = 120, oy = 60;
  int total_max = 1;
  for (const auto& row : confusion)
    for (auto v : row) total_max = std::max(total_max, v);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << ox + 3 * cell + 20
      << "\" height=\"" << oy + 3 * cell + 40 << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << ox + 1.5 * cell << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (int r = 0; r < 3; ++r) {
    out << "<text x=\"" << ox - 8 << "\" y=\"" << oy + r * cell + cell / 2
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << labels[r] << "</text>\n";
    out << "<text x=\"" << ox + r * cell + cell / 2 << "\" y=\"" << oy - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << labels[r] << "</text>\n";
    for (int c = 0; c < 3; ++c) {
      const double t = static_cast<double>(confusion[r][c]) / total_max;
      out << "<rect x=\"" << ox + c * cell << "\" y=\"" << oy + r * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << detail::heat_color(t) << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << ox + c * cell + cell / 2 << "\" y=\""
          << oy + r * cell + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
          << "fill=\"white\" stroke=\"black\" stroke-width=\"0.4\">"
          << confusion[r][c] << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace ris_sense::svg
