#include "bicav/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bicav/errors.hpp"

namespace bicav {

namespace {
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  const double width = 760, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) y_max = y_min + 1;
  y_max += (y_max - y_min) * 0.05;

  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ofstream out(path);
  if (!out) throw ConfigError("write_svg_plot: cannot open '" + path.string() + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' viewBox='0 0 " << width << " " << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='22' text-anchor='middle' font-size='15' "
         "font-family='sans-serif'>"
      << title << "</text>\n";
  // axes
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << pw << "' height='"
      << ph << "' fill='none' stroke='black'/>\n";
  char buf[64];
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    std::snprintf(buf, sizeof buf, "%.4g", fx);
    out << "<text x='" << px(fx) << "' y='" << mt + ph + 18
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << buf
        << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", fy);
    out << "<text x='" << ml - 6 << "' y='" << py(fy) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << buf
        << "</text>\n";
    out << "<line x1='" << px(fx) << "' y1='" << mt + ph << "' x2='" << px(fx)
        << "' y2='" << mt + ph - 5 << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << py(fy) << "' x2='" << ml + 5 << "' y2='"
        << py(fy) << "' stroke='black'/>\n";
  }
  out << "<text x='" << ml + pw / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << x_label
      << "</text>\n";
  out << "<text x='16' y='" << mt + ph / 2
      << "' text-anchor='middle' font-size='13' font-family='sans-serif' "
         "transform='rotate(-90 16 "
      << mt + ph / 2 << ")'>" << y_label << "</text>\n";

  int ci = 0;
  double ly = mt + 14;
  for (const auto& s : series) {
    const char* color = kColors[ci % 8];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    out << "'/>\n";
    if (!s.label.empty()) {
      out << "<line x1='" << ml + pw - 130 << "' y1='" << ly << "' x2='"
          << ml + pw - 110 << "' y2='" << ly << "' stroke='" << color
          << "' stroke-width='2'/>\n";
      out << "<text x='" << ml + pw - 104 << "' y='" << ly + 4
          << "' font-size='12' font-family='sans-serif'>" << s.label << "</text>\n";
      ly += 16;
    }
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace bicav
