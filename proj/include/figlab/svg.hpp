#pragma once
#include <string>
#include <vector>

namespace figlab {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart / heatmap renderers for report files.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series);

struct SvgHeatmap {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  // row-major, NaN cells rendered as absent
  std::vector<double> values;
};

std::string render_heatmap(const SvgHeatmap& map);

}  // namespace figlab
