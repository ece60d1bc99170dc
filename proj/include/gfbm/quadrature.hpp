#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gfbm {

/// Integrand of the form core(x) * (x - a)^left_exponent * (b - x)^right_exponent
/// on [a, b]. The power factors are supplied by the quadrature, so core only has
/// to be finite on the open interval.
struct SingularIntegrand {
  std::function<double(double)> core;
  double left_exponent = 0.0;
  double right_exponent = 0.0;
};

struct QuadResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Stopping rule: |error| <= max(rel_tol * |value|, abs_tol).
struct QuadOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-9;
  std::size_t max_evaluations = 2'000'000;
};

inline constexpr double kDefaultTol = 1e-9;

/// Integrates a SingularIntegrand over [a, b]. Each half of the interval is
/// mapped through x = a + L s^{1/(1+p)} (mirrored on the right) which absorbs
/// the power factor exactly, then refined by globally adaptive Gauss-Kronrod
/// (10/21) bisection.
QuadResult integrate_singular(const SingularIntegrand& f, double a, double b, double tol);
QuadResult integrate_singular(const SingularIntegrand& f, double a, double b,
                              const QuadOptions& options);

/// Integrates core over [a, inf) where core(x) ~ x^decay_exponent at infinity,
/// via x = a / s on (0, 1]. Throws DivergentTail if decay_exponent >= -1.
QuadResult integrate_tail(const std::function<double(double)>& core, double a,
                          double decay_exponent, double tol);
QuadResult integrate_tail(const std::function<double(double)>& core, double a,
                          double decay_exponent, const QuadOptions& options);

/// n-point Gauss rule on [-1, 1] for the weight (1 - x)^a (1 + x)^b, a, b > -1.
/// Golub-Welsch; weights include the weight function.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_jacobi(int n, double a, double b);

}  // namespace gfbm
