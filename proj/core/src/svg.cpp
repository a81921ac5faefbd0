#include "ucrcd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 500;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr double kDotRadius = 2.5;

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// A "nice" step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

PlotSeries incumbent_series(std::string label) {
  PlotSeries s;
  s.label = std::move(label);
  s.point_color = "blue";
  s.curve_color = "red";
  return s;
}

PlotSeries entrant_series(std::string label) {
  PlotSeries s;
  s.label = std::move(label);
  s.point_color = "black";
  s.curve_color = "green";
  return s;
}

std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       const std::string& y_label) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_max = 0.0;
  for (const auto& s : series) {
    if (s.points.size() != s.point_years.size() || s.curve.size() != s.curve_years.size()) {
      throw InvalidArgument(fmt::format("plot series '{}' has mismatched x/y lengths", s.label));
    }
    for (double x : s.point_years) x_min = std::min(x_min, x), x_max = std::max(x_max, x);
    for (double x : s.curve_years) x_min = std::min(x_min, x), x_max = std::max(x_max, x);
    for (double y : s.points) y_max = std::max(y_max, y);
    for (double y : s.curve) y_max = std::max(y_max, y);
  }
  if (!std::isfinite(x_min)) throw InvalidArgument("nothing to plot");
  if (x_max == x_min) x_max = x_min + 1;
  if (!(y_max > 0.0) || !std::isfinite(y_max)) y_max = 1.0;
  const double y_step = nice_step(y_max, 5);
  y_max = std::ceil(y_max / y_step) * y_step;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - std::max(y, 0.0) / y_max * plot_h; };

  std::string out;
  out += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kWidth / 2, escape(title));

  // Axes and ticks are lines, so the only <path> elements are data layers.
  out += "<g class=\"axes\" stroke=\"#444\" stroke-width=\"1\">\n";
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", kLeft, kTop + plot_h, kLeft + plot_w,
                     kTop + plot_h);
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", kLeft, kTop, kLeft, kTop + plot_h);
  const int first_tick = static_cast<int>(std::ceil(x_min / 5.0)) * 5;
  for (int year = first_tick; year <= x_max; year += 5) {
    const double x = px(year);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\"/>\n", x, kTop + plot_h, x,
                       kTop + plot_h + 5);
  }
  for (double y = 0; y <= y_max + 1e-9 * y_max; y += y_step) {
    out += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\"/>\n", kLeft - 5, py(y), kLeft,
                       py(y));
  }
  out += "</g>\n<g class=\"labels\" fill=\"#222\">\n";
  for (int year = first_tick; year <= x_max; year += 5) {
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(year),
                       kTop + plot_h + 20, year);
  }
  for (double y = 0; y <= y_max + 1e-9 * y_max; y += y_step) {
    out += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 8,
                       py(y) + 4, y);
  }
  out += fmt::format("<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
                     kTop + plot_h / 2, kTop + plot_h / 2, escape(y_label));
  out += "</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out += fmt::format("<g class=\"series\" id=\"series-{}\">\n<title>{}</title>\n", i, escape(s.label));
    if (!s.points.empty()) {
      std::string d;
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        const double x = px(s.point_years[k]);
        const double y = py(s.points[k]);
        d += fmt::format("M{:.2f},{:.2f}a{r},{r} 0 1,0 {d},0a{r},{r} 0 1,0 -{d},0", x - kDotRadius, y,
                         fmt::arg("r", kDotRadius), fmt::arg("d", 2 * kDotRadius));
      }
      out += fmt::format("<path class=\"points\" fill=\"{}\" stroke=\"none\" d=\"{}\"/>\n", s.point_color, d);
    }
    if (!s.curve.empty()) {
      std::string d;
      for (std::size_t k = 0; k < s.curve.size(); ++k) {
        d += fmt::format("{}{:.2f},{:.2f}", k == 0 ? "M" : "L", px(s.curve_years[k]), py(s.curve[k]));
      }
      out += fmt::format("<path class=\"curve\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" d=\"{}\"/>\n",
                         s.curve_color, d);
    }
    out += "</g>\n";
  }

  // Legend.
  double ly = kTop + 10;
  for (const auto& s : series) {
    const std::string& color = s.curve.empty() ? s.point_color : s.curve_color;
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", kLeft + 15, ly,
                       color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kLeft + 33, ly + 10, escape(s.label));
    ly += 18;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ucrcd
