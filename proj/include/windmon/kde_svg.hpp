#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace windmon::plot {

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
};

// Gaussian kernel density with Silverman's bandwidth on a uniform grid.
Curve kernel_density(const std::vector<double>& samples, int grid_points = 256,
                     const std::string& label = "");

double silverman_bandwidth(const std::vector<double>& samples);

// One SVG panel: one density path per curve, optional dashed vertical truth line.
std::string density_svg(const std::string& title, const std::vector<Curve>& curves,
                        std::optional<double> truth_line);

// Sweep overlay: the zero-scour predictive density plus one dashed vertical
// marker per (depth, mean frequency) entry.
std::string sweep_svg(const std::string& title, const Curve& density,
                      const std::vector<std::pair<double, double>>& depth_means);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace windmon::plot
