#pragma once

namespace gfbm {

/// Gamma function for x > 0. Exact factorials for integer x <= 21,
/// Lanczos (g = 7, 9 terms) elsewhere. Throws DomainError for x <= 0.
double gamma_fn(double x);

/// log Gamma(x) for x > 0.
double log_gamma_fn(double x);

/// Beta(p, q) = Gamma(p) Gamma(q) / Gamma(p + q) for p, q > 0.
double beta_fn(double p, double q);

/// Standard normal distribution function.
double normal_cdf(double x);

}  // namespace gfbm
