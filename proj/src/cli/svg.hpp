#pragma once

#include <string>
#include <vector>

namespace gfbm::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = true;
};

/// Static line plot, fixed 640x420 canvas, no timestamps.
std::string line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace gfbm::cli
