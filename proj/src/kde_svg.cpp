#include "windmon/kde_svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "windmon/errors.hpp"

namespace windmon::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 44.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

struct Axes {
  double x_min, x_max, y_min, y_max;

  double px(double x) const {
    return kMarginLeft + (x - x_min) / (x_max - x_min) * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    return kHeight - kMarginBottom -
           (y - y_min) / (y_max - y_min) * (kHeight - kMarginTop - kMarginBottom);
  }
};

std::string svg_header(const std::string& title) {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(kWidth / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         title + "</text>\n";
  return out;
}

std::string axes_frame(const Axes& axes) {
  std::string out;
  out += "<line x1=\"" + fmt(kMarginLeft) + "\" y1=\"" + fmt(kHeight - kMarginBottom) +
         "\" x2=\"" + fmt(kWidth - kMarginRight) + "\" y2=\"" + fmt(kHeight - kMarginBottom) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(kMarginLeft) + "\" y1=\"" + fmt(kMarginTop) + "\" x2=\"" +
         fmt(kMarginLeft) + "\" y2=\"" + fmt(kHeight - kMarginBottom) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = axes.x_min + (axes.x_max - axes.x_min) * i / 4.0;
    out += "<text x=\"" + fmt(axes.px(x)) + "\" y=\"" + fmt(kHeight - kMarginBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(x) +
           "</text>\n";
  }
  return out;
}

std::string curve_path(const Curve& curve, const Axes& axes, const std::string& color) {
  std::string d;
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    d += (i == 0 ? "M" : "L");
    d += fmt(axes.px(curve.x[i])) + " " + fmt(axes.py(curve.y[i]));
  }
  return "<path class=\"density\" d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.5\"/>\n";
}

std::string vertical_marker(double x, const Axes& axes, const std::string& color,
                            const std::string& cls) {
  return "<line class=\"" + cls + "\" x1=\"" + fmt(axes.px(x)) + "\" y1=\"" + fmt(kMarginTop) +
         "\" x2=\"" + fmt(axes.px(x)) + "\" y2=\"" + fmt(kHeight - kMarginBottom) +
         "\" stroke=\"" + color + "\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("bandwidth needs at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < n ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac : sorted[lo];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

Curve kernel_density(const std::vector<double>& samples, int grid_points,
                     const std::string& label) {
  if (samples.size() < 2) throw std::invalid_argument("density needs at least 2 samples");
  if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
  const double h = silverman_bandwidth(samples);
  const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *min_it - 3.0 * h;
  double hi = *max_it + 3.0 * h;
  if (hi <= lo) {
    lo -= 1.0;
    hi += 1.0;
  }

  Curve curve;
  curve.label = label;
  curve.x.resize(grid_points);
  curve.y.resize(grid_points);
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + (hi - lo) * g / (grid_points - 1.0);
    double density = 0.0;
    for (double v : samples) {
      const double z = (x - v) / h;
      density += std::exp(-0.5 * z * z);
    }
    curve.x[g] = x;
    curve.y[g] = density * norm;
  }
  return curve;
}

std::string density_svg(const std::string& title, const std::vector<Curve>& curves,
                        std::optional<double> truth_line) {
  if (curves.empty()) throw std::invalid_argument("density plot needs at least one curve");
  Axes axes{curves.front().x.front(), curves.front().x.back(), 0.0, 0.0};
  for (const auto& c : curves) {
    axes.x_min = std::min(axes.x_min, *std::min_element(c.x.begin(), c.x.end()));
    axes.x_max = std::max(axes.x_max, *std::max_element(c.x.begin(), c.x.end()));
    axes.y_max = std::max(axes.y_max, *std::max_element(c.y.begin(), c.y.end()));
  }
  if (truth_line) {
    axes.x_min = std::min(axes.x_min, *truth_line);
    axes.x_max = std::max(axes.x_max, *truth_line);
  }
  if (axes.y_max <= 0.0) axes.y_max = 1.0;
  axes.y_max *= 1.05;

  std::string out = svg_header(title);
  out += axes_frame(axes);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    out += curve_path(curves[i], axes, kPalette[i % 8]);
  }
  if (truth_line) out += vertical_marker(*truth_line, axes, "black", "truth");
  out += "</svg>\n";
  return out;
}

std::string sweep_svg(const std::string& title, const Curve& density,
                      const std::vector<std::pair<double, double>>& depth_means) {
  Axes axes{density.x.front(), density.x.back(), 0.0,
            *std::max_element(density.y.begin(), density.y.end()) * 1.05};
  for (const auto& [depth, mean] : depth_means) {
    axes.x_min = std::min(axes.x_min, mean);
    axes.x_max = std::max(axes.x_max, mean);
  }

  std::string out = svg_header(title);
  out += axes_frame(axes);
  out += curve_path(density, axes, kPalette[4]);
  for (std::size_t i = 0; i < depth_means.size(); ++i) {
    out += vertical_marker(depth_means[i].second, axes, kPalette[i % 8], "depth-marker");
    out += "<text x=\"" + fmt(axes.px(depth_means[i].second)) + "\" y=\"" +
           fmt(kMarginTop - 4.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           fmt(depth_means[i].first) + " m</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open file for writing: " + path);
  out << content;
}

}  // namespace windmon::plot
