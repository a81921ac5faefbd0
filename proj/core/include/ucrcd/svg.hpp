#pragma once

#include <string>
#include <vector>

namespace ucrcd {

/// One technology in a plot: observed points and a predicted curve, both over
/// calendar years. Either layer may be empty.
struct PlotSeries {
  std::string label;
  std::vector<double> point_years;
  std::vector<double> points;
  std::vector<double> curve_years;
  std::vector<double> curve;
  std::string point_color;
  std::string curve_color;
};

/// Series styled like the published panels: incumbent blue dots / red line,
/// entrant black dots / green line.
PlotSeries incumbent_series(std::string label);
PlotSeries entrant_series(std::string label);

/// Standalone SVG (800x500 viewBox, linear axes, ticks every 5 years). Each
/// non-empty layer is a single <path>.
std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       const std::string& y_label = "EJ / year");

}  // namespace ucrcd
