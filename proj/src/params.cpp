#include "gfbm/params.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "gfbm/errors.hpp"

namespace gfbm {

ProcessParams ProcessParams::validate(double gamma, double alpha, double theta) {
  std::vector<OutOfRange> bad;
  if (!std::isfinite(gamma) || gamma < 0.0 || gamma >= 1.0) {
    bad.push_back({"gamma", "[0, 1)", gamma});
  }
  // The alpha window depends on gamma; report it against the gamma given.
  const double alpha_low = -0.5 + 0.5 * gamma;
  if (!std::isfinite(alpha) || !(alpha > alpha_low) || alpha >= 0.5) {
    std::ostringstream interval;
    interval << '(' << alpha_low << ", 0.5)";
    bad.push_back({"alpha", interval.str(), alpha});
  }
  if (!std::isfinite(theta) || !(theta > 0.0)) {
    bad.push_back({"theta", "(0, inf)", theta});
  }
  if (!bad.empty()) throw ParamError(std::move(bad));
  return ProcessParams(gamma, alpha, theta);
}

DerivedExponents derive(const ProcessParams& params) {
  const double hurst = params.alpha() - 0.5 * params.gamma() + 0.5;
  const double beta = params.alpha() + params.theta() + 0.5;
  return {hurst, beta, hurst + params.theta()};
}

}  // namespace gfbm
