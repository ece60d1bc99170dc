#pragma once

#include <cstddef>
#include <vector>

namespace gfbm {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low;
  double high;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t hits, std::size_t n, double z = kZ95);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> sample, double p);
double median(std::vector<double> sample);

/// Distribution-free interval for the median: order statistics at ranks
/// n/2 -+ z sqrt(n)/2, clamped to the sample.
Interval median_interval(std::vector<double> sample, double z = kZ95);

struct KsResult {
  double statistic;
  double critical_1pct;  // 1.628 sqrt((n + m) / (n m)), asymptotic
  bool reject_1pct;
};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
  double slope;
  double intercept;
  double slope_stderr;  // from weighted residuals, n - 2 degrees of freedom
  double r2;            // weighted
};

/// Weighted least squares y ~ intercept + slope x. Needs >= 2 distinct x.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w);

}  // namespace gfbm
