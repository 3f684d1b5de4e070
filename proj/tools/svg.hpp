#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfmgan::cli {

// Self-contained SVG line charts for the benchmark reports. No styling
// dependencies; everything is inline attributes.

struct Series {
  std::string label;
  std::string color;
  std::vector<std::array<double, 2>> points;  // (x, y), non-finite y is skipped
};

namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

inline void write_line_chart(const std::filesystem::path& path, const std::string& title,
                             const std::string& x_label, const std::string& y_label,
                             const std::vector<Series>& series) {
  using detail::fmt;
  using detail::xml_escape;

  const double width = 860, height = 520;
  const double ml = 72, mr = 24, mt = 48, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const Series& s : series) {
    for (const auto& p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      x_min = std::min(x_min, p[0]);
      x_max = std::max(x_max, p[0]);
      y_min = std::min(y_min, p[1]);
      y_max = std::max(y_max, p[1]);
    }
  }
  if (!(x_min <= x_max)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  if (!(y_min <= y_max)) {
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("svg: cannot open '" + path.string() + "'");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << xml_escape(title) << "</text>\n";

  // Axes with five ticks per side.
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(fx) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
        << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\"" << sy(fy)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(x_label)
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (const Series& s : series) {
    std::string pts;
    for (const auto& p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      pts += fmt(sx(p[0])) + "," + fmt(sy(p[1])) + " ";
    }
    if (pts.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << xml_escape(s.color)
        << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
  }

  // Legend: unique (label, color) combinations in first-seen order.
  std::vector<std::pair<std::string, std::string>> entries;
  for (const Series& s : series) {
    const auto e = std::make_pair(s.label, s.color);
    if (std::find(entries.begin(), entries.end(), e) == entries.end()) entries.push_back(e);
  }
  double ly = mt + 10;
  for (const auto& [label, color] : entries) {
    out << "<line x1=\"" << ml + pw - 130 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw - 106 << "\" y2=\""
        << ly << "\" stroke=\"" << xml_escape(color) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw - 100 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(label) << "</text>\n";
    ly += 18;
  }

  out << "</svg>\n";
  if (!out) throw std::runtime_error("svg: write failed on '" + path.string() + "'");
}

}  // namespace lfmgan::cli
