#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bicav {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal static SVG line plot. Plots are a convenience; CSV files are the
// contract.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

}  // namespace bicav
