#pragma once

// Minimal SVG line charts of summary tables.

#include "sparseica/bench/summary.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace sparseica::bench {

enum class Statistic { mean, median };

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  Statistic statistic = Statistic::median;
  double width = 640.0;
  double height = 420.0;
};

/// Data-to-pixel map of one axis. Pixel coordinates grow along the SVG axis,
/// so the y map has pixel_lo > pixel_hi.
struct AxisMap {
  double data_lo = 0.0;
  double data_hi = 1.0;
  double pixel_lo = 0.0;
  double pixel_hi = 1.0;
  bool log = false;

  double to_pixel(double v) const;
  double to_data(double p) const;
};

struct PlotResult {
  std::string svg;
  AxisMap x;
  AxisMap y;
  std::size_t dropped_points = 0;  // non-finite, or nonpositive under log scale
  std::size_t series = 0;
};

/// One polyline per algorithm, in the order algorithms appear in `rows`.
/// Throws Error when there is nothing to draw.
PlotResult render_plot(const std::vector<SummaryRow>& rows, const PlotSpec& spec);

/// Sensible labels for an experiment's figure.
PlotSpec default_plot_spec(const std::string& experiment);

}  // namespace sparseica::bench
