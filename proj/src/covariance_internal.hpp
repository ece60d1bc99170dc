#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gfbm/covariance.hpp"

namespace gfbm::detail {

struct KernelShape {
  double gamma;
  double alpha;
  double e;     // exponent of (t - x) on the positive half-line
  double amp2;  // squared constant in front of the positive half-line kernel
  std::function<double(double, double)> left;  // L(t, y); empty when identically zero
  // L(t, y) = P(t, y) + y^alpha Q(t, y) with P, Q smooth, valid for y <= t/4
  std::function<double(double, double)> left_p;
  std::function<double(double, double)> left_q;
};

struct PanelAssembly {
  Eigen::MatrixXd entries;
};

KernelShape kernel_shape(const ProcessParams& params, Process which);

PanelAssembly assemble_panels(const KernelShape& shape, const std::vector<double>& grid,
                              int workers);

}  // namespace gfbm::detail
