#include "gfbm/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "covariance_internal.hpp"
#include "gfbm/csv.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/parallel.hpp"
#include "gfbm/quadrature.hpp"
#include "gfbm/special.hpp"

namespace gfbm {

namespace {

void require_positive(double a, double b, const char* who) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError(std::string(who) + ": times must be finite and positive");
  }
}

// (u + x)^alpha - x^alpha = x^alpha * g(u, x), without cancellation for x >> u.
inline double rel_increment(double alpha, double u, double x) {
  return std::expm1(alpha * std::log1p(u / x));
}

// int_0^r (1-eta)^{theta-1} eta^alpha d eta / r^{alpha+1}
//   = sum_n (1-theta)_n / n! r^n / (alpha+1+n), r <= 2/3.
double incomplete_tail(double alpha, double theta, double r) {
  double rising = 1.0;
  double rn = 1.0;
  double tail = 0.0;
  for (int n = 0; n <= 2000; ++n) {
    const double term = rising * rn / (alpha + 1.0 + n);
    tail += term;
    if (std::abs(term) <= 1e-17 * std::abs(tail)) break;
    rising *= (n + 1.0 - theta) / (n + 1.0);
    rn *= r;
  }
  return tail;
}

// k_t(y) * y^{-alpha}, where
//   k_t(y) = Gamma(theta)^{-1} int_0^t (t-w)^{theta-1} ((w+y)^alpha - y^alpha) dw.
// For y >= 2t the binomial series in t/y; below that the incomplete Beta form
//   int_0^t (t-w)^{theta-1} (w+y)^alpha dw = (t+y)^{alpha+theta} B_{t/(t+y)}(theta, alpha+1)
// with the complementary part expanded in r = y/(t+y) <= 2/3.
double left_kernel_scaled(double alpha, double theta, double inv_gamma_theta, double beta_full,
                          double t, double y) {
  constexpr int kMaxTerms = 2000;
  constexpr double kStop = 1e-17;
  if (y >= 2.0 * t) {
    const double x = t / y;
    double coef = alpha;                    // binomial(alpha, n)
    double b = beta_fn(theta, 2.0);         // B(theta, n + 1)
    double xn = x;
    double sum = 0.0;
    for (int n = 1; n <= kMaxTerms; ++n) {
      const double term = coef * b * xn;
      sum += term;
      if (std::abs(term) <= kStop * std::abs(sum)) break;
      coef *= (alpha - n) / (n + 1.0);
      b *= (n + 1.0) / (n + 1.0 + theta);
      xn *= x;
    }
    return std::pow(t, theta) * sum * inv_gamma_theta;
  }
  const double r = y / (t + y);
  const double tail = incomplete_tail(alpha, theta, r);
  const double inc = beta_full - std::pow(r, alpha + 1.0) * tail;
  const double full = std::pow(t + y, alpha + theta) * std::pow(y, -alpha) * inc;
  return (full - std::pow(t, theta) / theta) * inv_gamma_theta;
}

}  // namespace

const char* process_name(Process p) { return p == Process::X ? "X" : "Y"; }

double kernel_g(const ProcessParams& params, double s, double x) {
  const double alpha = params.alpha();
  const double gamma = params.gamma();
  if (!(s > 0.0)) return 0.0;
  if (x == 0.0) {
    if (gamma > 0.0) throw SingularPoint("kernel_g: |x|^{-gamma/2} is infinite at x = 0");
    return std::pow(s, alpha);
  }
  if (x > 0.0) {
    if (x >= s) return 0.0;
    return std::pow(s - x, alpha) * std::pow(x, -0.5 * gamma);
  }
  const double y = -x;
  return std::pow(y, alpha) * rel_increment(alpha, s, y) * std::pow(y, -0.5 * gamma);
}

KernelEval::KernelEval(const ProcessParams& params) : params_(params) {
  probe_norm_sq_ = cov_x(params, 1.0, 1.0, 1e-9);
  if (!(probe_norm_sq_ > 0.0) || !std::isfinite(probe_norm_sq_)) {
    throw DomainError("KernelEval: G(1, .) is not square integrable");
  }
}

CovValue cov_x_detailed(const ProcessParams& params, double u, double v, double tol) {
  require_positive(u, v, "cov_x");
  const double alpha = params.alpha();
  const double gamma = params.gamma();
  const double hurst = derive(params).hurst;
  const double lo = std::min(u, v);
  const double hi = std::max(u, v);
  const QuadOptions opt{tol / 3.0, tol * std::pow(lo * hi, hurst) / 3.0, 2'000'000};

  CovValue out;
  // J1 = int_0^lo x^{-gamma} (u-x)^alpha (v-x)^alpha dx
  QuadResult j1;
  if (lo == hi) {
    j1 = integrate_singular({[](double) { return 1.0; }, -gamma, 2.0 * alpha}, 0.0, lo, opt);
  } else {
    j1 = integrate_singular({[=](double x) { return std::pow(hi - x, alpha); }, -gamma, alpha},
                            0.0, lo, opt);
  }
  out.value = j1.value;
  out.abs_error = j1.abs_error_estimate;
  if (alpha == 0.0) return out;

  // J2 on (0, 1]: f_u f_v x^{-gamma} = x^{2 alpha - gamma} g_u g_v
  const double p = -gamma + 2.0 * std::min(alpha, 0.0);
  const double near_power = 2.0 * std::max(alpha, 0.0);
  auto near = [=](double x) {
    return std::pow(x, near_power) * rel_increment(alpha, u, x) * rel_increment(alpha, v, x);
  };
  const QuadResult j21 = integrate_singular({near, p, 0.0}, 0.0, 1.0, opt);
  auto far = [=](double x) {
    return std::pow(x, 2.0 * alpha - gamma) * rel_increment(alpha, u, x) *
           rel_increment(alpha, v, x);
  };
  const QuadResult j22 = integrate_tail(far, 1.0, 2.0 * alpha - 2.0 - gamma, opt);
  out.value += j21.value + j22.value;
  out.abs_error += j21.abs_error_estimate + j22.abs_error_estimate;
  return out;
}

double cov_x(const ProcessParams& params, double u, double v, double tol) {
  return cov_x_detailed(params, u, v, tol).value;
}

CovValue cov_y_detailed(const ProcessParams& params, double s, double t, double tol) {
  require_positive(s, t, "cov_y");
  const double alpha = params.alpha();
  const double gamma = params.gamma();
  const double theta = params.theta();
  const double index = derive(params).y_index;
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  const QuadOptions opt{tol / 3.0, tol * std::pow(lo * hi, index) / 3.0, 2'000'000};
  const double at = alpha + theta;

  // Positive half-line: Y's kernel is a constant multiple of x^{-gamma/2} (t-x)^{alpha+theta}.
  const double amp = std::exp(log_gamma_fn(alpha + 1.0) - log_gamma_fn(at + 1.0));
  QuadResult pos;
  if (lo == hi) {
    pos = integrate_singular({[](double) { return 1.0; }, -gamma, 2.0 * at}, 0.0, lo, opt);
  } else {
    pos = integrate_singular({[=](double x) { return std::pow(hi - x, at); }, -gamma, at}, 0.0,
                             lo, opt);
  }
  CovValue out{amp * amp * pos.value, amp * amp * pos.abs_error_estimate};
  if (alpha == 0.0) return out;

  // Negative half-line, x = -y.
  const double inv_gt = 1.0 / gamma_fn(theta);
  const double bfull = beta_fn(theta, alpha + 1.0);
  auto kk = [=](double y) {
    const double ks = left_kernel_scaled(alpha, theta, inv_gt, bfull, s, y);
    const double kt = s == t ? ks : left_kernel_scaled(alpha, theta, inv_gt, bfull, t, y);
    return ks * kt;
  };
  const double p = -gamma + 2.0 * std::min(alpha, 0.0);
  const double near_power = 2.0 * std::max(alpha, 0.0);
  const QuadResult n1 =
      integrate_singular({[=](double y) { return std::pow(y, near_power) * kk(y); }, p, 0.0}, 0.0,
                         hi, opt);
  const QuadResult n2 = integrate_tail(
      [=](double y) { return std::pow(y, 2.0 * alpha - gamma) * kk(y); }, hi,
      2.0 * alpha - 2.0 - gamma, opt);
  out.value += n1.value + n2.value;
  out.abs_error += n1.abs_error_estimate + n2.abs_error_estimate;
  return out;
}

double y_left_kernel(const ProcessParams& params, double t, double y) {
  require_positive(t, y, "y_left_kernel");
  const double alpha = params.alpha();
  const double theta = params.theta();
  return std::pow(y, alpha) * left_kernel_scaled(alpha, theta, 1.0 / gamma_fn(theta),
                                                 beta_fn(theta, alpha + 1.0), t, y);
}

double cov_y(const ProcessParams& params, double s, double t, double tol) {
  return cov_y_detailed(params, s, t, tol).value;
}

double cov_y_tensor(const ProcessParams& params, double s, double t, double tol) {
  require_positive(s, t, "cov_y_tensor");
  const double theta = params.theta();
  const double inner_tol = tol * 1e-2;
  const double cx_tol = tol * 1e-3;
  auto row = [&](double u) {
    // int_0^t (t-v)^{theta-1} cov_x(u, v) dv, split at the kink v = u
    auto cx = [&](double v) { return v > 0.0 ? cov_x(params, u, v, cx_tol) : 0.0; };
    const QuadOptions opt{inner_tol, inner_tol * 1e-3, 2'000'000};
    if (u >= t) return integrate_singular({cx, 0.0, theta - 1.0}, 0.0, t, opt).value;
    const double a = integrate_singular(
        {[&](double v) { return cx(v) * std::pow(t - v, theta - 1.0); }, 0.0, 0.0}, 0.0, u, opt)
                         .value;
    return a + integrate_singular({cx, 0.0, theta - 1.0}, u, t, opt).value;
  };
  auto outer_core = [&](double u) { return u > 0.0 ? row(u) : 0.0; };
  const double g = gamma_fn(theta);
  const QuadOptions opt{tol, tol * 1e-3, 2'000'000};
  return integrate_singular({outer_core, 0.0, theta - 1.0}, 0.0, s, opt).value / (g * g);
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw DomainError("grid times must be finite and positive");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw DomainError("grid must be strictly increasing");
    }
  }
}

namespace {

CovMatrix cov_matrix_per_entry(const ProcessParams& params, const std::vector<double>& grid,
                               Process which, double tol, int workers) {
  const std::size_t m = grid.size();
  Eigen::MatrixXd c(m, m);
  std::vector<double> row_error(m, 0.0);
  parallel_for(m, workers, [&](std::size_t i) {
    double worst = 0.0;
    for (std::size_t j = i; j < m; ++j) {
      CovValue cv;
      try {
        cv = which == Process::X ? cov_x_detailed(params, grid[i], grid[j], tol)
                                 : cov_y_detailed(params, grid[i], grid[j], tol);
      } catch (const NoConvergence& e) {
        throw NoConvergence(e.evaluations(), e.best_estimate(),
                            std::string(e.what()) + " at entry (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
      }
      c(i, j) = cv.value;
      c(j, i) = cv.value;
      worst = std::max(worst, cv.abs_error);
    }
    row_error[i] = worst;
  });
  const double max_err = *std::max_element(row_error.begin(), row_error.end());
  return CovMatrix{grid, std::move(c), which, max_err, params};
}

}  // namespace

detail::KernelShape detail::kernel_shape(const ProcessParams& params, Process which) {
  const double alpha = params.alpha();
  const double theta = params.theta();
  detail::KernelShape shape{params.gamma(), alpha, alpha, 1.0, {}, {}, {}};
  if (which == Process::Y) {
    shape.e = alpha + theta;
    const double amp = std::exp(log_gamma_fn(alpha + 1.0) - log_gamma_fn(alpha + theta + 1.0));
    shape.amp2 = amp * amp;
  }
  if (alpha == 0.0) return shape;
  if (which == Process::X) {
    shape.left = [alpha](double t, double y) {
      return std::pow(y, alpha) * rel_increment(alpha, t, y);
    };
    shape.left_p = [alpha](double t, double y) { return std::pow(t + y, alpha); };
    shape.left_q = [](double, double) { return -1.0; };
  } else {
    const double inv_gt = 1.0 / gamma_fn(theta);
    const double bfull = beta_fn(theta, alpha + 1.0);
    shape.left = [=](double t, double y) {
      return std::pow(y, alpha) * left_kernel_scaled(alpha, theta, inv_gt, bfull, t, y);
    };
    shape.left_p = [=](double t, double y) {
      return std::pow(t + y, alpha + theta) * bfull * inv_gt;
    };
    shape.left_q = [=](double t, double y) {
      const double tail = incomplete_tail(alpha, theta, y / (t + y));
      return -(y * std::pow(t + y, theta - 1.0) * tail + std::pow(t, theta) / theta) * inv_gt;
    };
  }
  return shape;
}

namespace {

// Audited pairs: the diagonal and four rows, each thinned to at most ~128 entries.
std::vector<std::pair<std::size_t, std::size_t>> audit_pairs(std::size_t m) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t stride = std::max<std::size_t>(1, m / 128);
  for (std::size_t i = 0; i < m; i += stride) pairs.emplace_back(i, i);
  pairs.emplace_back(m - 1, m - 1);
  for (std::size_t r : {std::size_t{0}, m / 3, (2 * m) / 3, m - 1}) {
    for (std::size_t j = 0; j < m; j += stride) {
      if (j != r) pairs.emplace_back(std::min(r, j), std::max(r, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace

CovMatrix cov_matrix(const ProcessParams& params, const std::vector<double>& grid, Process which,
                     double tol, int workers, CovMethod method) {
  check_grid(grid);
  const std::size_t m = grid.size();
  if (method == CovMethod::PerEntry || (method == CovMethod::Auto && m < 16)) {
    return cov_matrix_per_entry(params, grid, which, tol, workers);
  }
  detail::PanelAssembly panels = detail::assemble_panels(detail::kernel_shape(params, which), grid, workers);

  const auto pairs = audit_pairs(m);
  std::vector<double> excess(pairs.size(), 0.0);
  std::vector<double> bound(pairs.size(), 0.0);
  const double index = which == Process::X ? derive(params).hurst : derive(params).y_index;
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const CovValue ref = which == Process::X ? cov_x_detailed(params, grid[i], grid[j], tol)
                                             : cov_y_detailed(params, grid[i], grid[j], tol);
    const double diff = std::abs(panels.entries(i, j) - ref.value);
    const double scale = std::max(std::abs(ref.value), std::pow(grid[i] * grid[j], index));
    excess[k] = diff / (tol * scale);
    bound[k] = diff + ref.abs_error;
  });
  if (*std::max_element(excess.begin(), excess.end()) > 100.0) {
    return cov_matrix_per_entry(params, grid, which, tol, workers);
  }
  const double max_err = *std::max_element(bound.begin(), bound.end());
  return CovMatrix{grid, std::move(panels.entries), which, max_err, params};
}

double lamperti_autocov(const ProcessParams& params, double t, double tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("lamperti_autocov: t must be >= 0");
  const double index = derive(params).y_index;
  const double value = cov_y(params, 1.0, std::exp(-t), tol);
  return std::exp(index * t) * value;
}

double lamperti_rate_bound(const ProcessParams& params) {
  const double g = params.gamma(), a = params.alpha();
  const double lo = std::max(a - g, 0.0) / (1.0 - a);
  const double hi = (0.5 - 0.5 * g) / (1.0 - a);
  const double delta = 0.5 * (lo + hi);
  return std::min(a + 0.5 - 0.5 * g, 0.5 - 0.5 * g - delta * (1.0 - a));
}

void write_cov_csv(const CovMatrix& cov, std::ostream& out) {
  const std::size_t m = cov.grid.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (j) out << ',';
    out << format_double(cov.grid[j]);
  }
  out << "\r\n";
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j) out << ',';
      out << format_double(cov.entries(i, j));
    }
    out << "\r\n";
  }
}

}  // namespace gfbm
