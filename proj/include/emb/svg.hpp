#pragma once

#include <string>
#include <vector>

namespace emb {

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal dependency-free SVG line chart, deterministic output.
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series);

}  // namespace emb
