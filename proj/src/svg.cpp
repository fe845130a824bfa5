#include "emb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace emb {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

}  // namespace

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write SVG: " + path);

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (!(x_min <= x_max)) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
  if (x_min == x_max) { x_min -= 0.5; x_max += 0.5; }
  if (y_min == y_max) { y_min -= 0.5; y_max += 0.5; }

  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 55;
  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  // ticks
  for (int i = 0; i <= 4; ++i) {
    double fx = x_min + (x_max - x_min) * i / 4.0;
    double fy = y_min + (y_max - y_min) * i / 4.0;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << h - mb << "\" x2=\"" << px(fx)
        << "\" y2=\"" << h - mb + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(fx) << "\" y=\"" << h - mb + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << py(fy) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(fy) << "</text>\n";
  }
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 " << (mt + h - mb) / 2 << ")\">"
      << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[s].points) out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (auto [x, y] : series[s].points)
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\""
          << color << "\"/>\n";
    if (series.size() > 1) {
      out << "<text x=\"" << w - mr - 6 << "\" y=\"" << mt + 16.0 * static_cast<double>(s + 1)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
          << color << "\">" << series[s].name << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace emb
