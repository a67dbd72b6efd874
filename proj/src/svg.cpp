#include "figlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace figlab {
namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  ymin = std::min(0.0, ymin);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  // axes
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4;
    const double yv = ymin + (ymax - ymin) * t / 4;
    out << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kMarginBottom + 16
        << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">" << y_label << "</text>\n";

  int legend_y = kMarginTop + 6;
  for (const auto& s : series) {
    if (s.x.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
    out << "<rect x=\"" << kWidth - 180 << "\" y=\"" << legend_y - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
    out << "<text x=\"" << kWidth - 165 << "\" y=\"" << legend_y << "\">" << s.label
        << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_heatmap(const SvgHeatmap& map) {
  const int nrows = static_cast<int>(map.row_labels.size());
  const int ncols = static_cast<int>(map.col_labels.size());
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (double v : map.values)
    if (std::isfinite(v)) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  if (!std::isfinite(vmin)) vmin = 0, vmax = 1;
  if (vmax == vmin) vmax = vmin + 1;

  const double cell = 56;
  const double width = kMarginLeft + ncols * cell + kMarginRight;
  const double height = kMarginTop + nrows * cell + kMarginBottom;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << map.title << "</text>\n";
  for (int r = 0; r < nrows; ++r) {
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + (r + 0.5) * cell + 4
        << "\" text-anchor=\"end\">" << map.row_labels[static_cast<std::size_t>(r)]
        << "</text>\n";
    for (int c = 0; c < ncols; ++c) {
      const double v = map.values[static_cast<std::size_t>(r * ncols + c)];
      const double x = kMarginLeft + c * cell;
      const double y = kMarginTop + r * cell;
      if (std::isfinite(v)) {
        const double t = (v - vmin) / (vmax - vmin);
        const int red = static_cast<int>(255 * t);
        const int blue = static_cast<int>(255 * (1 - t));
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"rgb(" << red << ",80," << blue
            << ")\" stroke=\"white\"/>\n";
        out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"middle\" fill=\"white\">" << fmt(v) << "</text>\n";
      } else {
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"#dddddd\" stroke=\"white\"/>\n";
      }
    }
  }
  for (int c = 0; c < ncols; ++c)
    out << "<text x=\"" << kMarginLeft + (c + 0.5) * cell << "\" y=\""
        << kMarginTop + nrows * cell + 18 << "\" text-anchor=\"middle\">"
        << map.col_labels[static_cast<std::size_t>(c)] << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace figlab
