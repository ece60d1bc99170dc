#pragma once

namespace gfbm {

/// Validated (gamma, alpha, theta) triple. Only obtainable through validate().
class ProcessParams {
 public:
  /// Accepts gamma in [0, 1), alpha in (-1/2 + gamma/2, 1/2), theta > 0.
  /// Throws ParamError listing every violated constraint.
  static ProcessParams validate(double gamma, double alpha, double theta);

  double gamma() const noexcept { return gamma_; }
  double alpha() const noexcept { return alpha_; }
  double theta() const noexcept { return theta_; }

  friend bool operator==(const ProcessParams&, const ProcessParams&) = default;

 private:
  ProcessParams(double gamma, double alpha, double theta)
      : gamma_(gamma), alpha_(alpha), theta_(theta) {}

  double gamma_;
  double alpha_;
  double theta_;
};

/// Exponents derived from a parameter triple.
struct DerivedExponents {
  double hurst;    // H = alpha - gamma/2 + 1/2, self-similarity index of X
  double beta;     // alpha + theta + 1/2, small-ball exponent of Y
  double y_index;  // H + theta, self-similarity index of Y
};

DerivedExponents derive(const ProcessParams& params);

}  // namespace gfbm
