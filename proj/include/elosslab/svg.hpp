#pragma once

#include <string>
#include <vector>

namespace elosslab::io {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Single-file SVG line/scatter panel. Purely a convenience view; the CSV
/// next to it remains the source of truth.
void write_svg_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<SvgSeries>& series);

}  // namespace elosslab::io
