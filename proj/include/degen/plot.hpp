#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace degen {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Static SVG line plot. Non-positive values are dropped on log axes; the
/// output depends only on the data, so it is byte-stable.
std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

void write_svg(const std::filesystem::path& path, const PlotSpec& spec,
               const std::vector<PlotSeries>& series);

}  // namespace degen
