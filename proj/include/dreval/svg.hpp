#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dreval/common.hpp"

namespace dreval::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional interval band; same length as x when present.
  std::vector<double> low;
  std::vector<double> high;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Vertical marker line (e.g. the chosen k).
  std::optional<double> marker_x;
};

std::string render(const LineChart& chart);

/// Square heatmap of `values` in [-1, 1], rows and columns labelled in order.
std::string heatmap(const std::string& title, const std::vector<std::string>& labels, const MatrixXd& values);

}  // namespace dreval::svg
