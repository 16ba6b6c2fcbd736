#pragma once
// Native SVG rendering for the three figure shapes the experiments need:
// heatmaps, line charts, grouped bars. Output strings are deterministic
// byte-for-byte for identical inputs.

#include <Eigen/Core>

#include <string>
#include <vector>

namespace monolab::svg {

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;  // "#rrggbb", empty picks from the default palette
};

struct BarSeries {
  std::string label;
  std::vector<double> values;  // one bar per group
  std::string color;
};

// Diverging blue-white-red cells, symmetric around zero.
std::string heatmap(const Eigen::MatrixXd& values, const std::string& title);

std::string line_chart(const std::vector<LineSeries>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

// Bars clustered per group, one cluster member per series.
std::string bar_chart(const std::vector<BarSeries>& series,
                      const std::vector<std::string>& group_labels,
                      const std::string& title, const std::string& y_label);

}  // namespace monolab::svg
