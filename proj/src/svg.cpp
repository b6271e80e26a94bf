#include "elosslab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace elosslab::io {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void absorb(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finalize() {
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<SvgSeries>& series) {
  const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.absorb(v);
    for (double v : s.y) ry.absorb(v);
  }
  rx.finalize();
  ry.finalize();
  const auto px = [&](double v) { return ml + (v - rx.lo) / (rx.hi - rx.lo) * (w - ml - mr); };
  const auto py = [&](double v) { return h - mb - (v - ry.lo) / (ry.hi - ry.lo) * (h - mt - mb); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg_lines: cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='22' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
  out << "<text x='" << w / 2 << "' y='" << h - 12 << "' text-anchor='middle' font-size='12'>"
      << xlabel << "</text>\n";
  out << "<text x='16' y='" << h / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << h / 2 << ")'>" << ylabel << "</text>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = rx.lo + t * (rx.hi - rx.lo) / 4.0;
    const double fy = ry.lo + t * (ry.hi - ry.lo) / 4.0;
    out << "<text x='" << px(fx) << "' y='" << h - mb + 16 << "' text-anchor='middle' font-size='10'>"
        << fx << "</text>\n";
    out << "<text x='" << ml - 6 << "' y='" << py(fy) + 3 << "' text-anchor='end' font-size='10'>"
        << fy << "</text>\n";
  }
  int ci = 0;
  for (const auto& s : series) {
    const char* color = kPalette[ci % 6];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "'/>\n";
    out << "<text x='" << w - mr - 8 << "' y='" << mt + 14 * (ci + 1)
        << "' text-anchor='end' font-size='11' fill='" << color << "'>" << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace elosslab::io
