#include "gfbm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "gfbm/errors.hpp"
#include "gfbm/special.hpp"

namespace gfbm {

namespace {

// Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478164, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Panel {
  std::size_t segment;
  double lo;
  double hi;
  double value;
  double error;
};

struct ByError {
  bool operator()(const Panel& l, const Panel& r) const { return l.error < r.error; }
};

using Mapped = std::function<double(double)>;

Panel gk21(const Mapped& g, std::size_t segment, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  std::array<double, 21> fv{};
  const double fc = g(center);
  double resk = fc * kWgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = g(center - dx);
    const double f2 = g(center + dx);
    fv[2 * j] = f1;
    fv[2 * j + 1] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 10; ++j) {
    resasc += kWgk[j] * (std::abs(fv[2 * j] - mean) + std::abs(fv[2 * j + 1] - mean));
  }
  resk *= half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg * half));
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
  if (!std::isfinite(resk)) err = std::numeric_limits<double>::infinity();
  return {segment, lo, hi, resk, err};
}

QuadResult adaptive(const std::vector<Mapped>& segments, const QuadOptions& options) {
  std::priority_queue<Panel, std::vector<Panel>, ByError> heap;
  std::size_t evaluations = 0;
  double value = 0.0;
  double error = 0.0;
  double frozen_value = 0.0;
  double frozen_error = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    Panel p = gk21(segments[i], i, 0.0, 1.0);
    evaluations += 21;
    value += p.value;
    error += p.error;
    heap.push(p);
  }
  auto target = [&] { return std::max(options.rel_tol * std::abs(value), options.abs_tol); };
  std::size_t since_resum = 0;
  while (error > target()) {
    if (heap.empty() || evaluations + 42 > options.max_evaluations) {
      throw NoConvergence(evaluations, value,
                          "integrate_singular: error " + std::to_string(error) +
                              " above tolerance after " + std::to_string(evaluations) +
                              " evaluations");
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi) || !std::isfinite(worst.value)) {
      // Interval exhausted at machine resolution; its error can no longer shrink.
      frozen_value += worst.value;
      frozen_error += worst.error;
      continue;
    }
    const Panel left = gk21(segments[worst.segment], worst.segment, worst.lo, mid);
    const Panel right = gk21(segments[worst.segment], worst.segment, mid, worst.hi);
    evaluations += 42;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    // Running sums drift under many cancelling updates; resum periodically.
    if (++since_resum == 64) {
      since_resum = 0;
      value = frozen_value;
      error = frozen_error;
      auto copy = heap;
      while (!copy.empty()) {
        value += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
    }
  }
  // Final resummation for a clean total.
  double total = frozen_value;
  double total_error = frozen_error;
  while (!heap.empty()) {
    total += heap.top().value;
    total_error += heap.top().error;
    heap.pop();
  }
  return {total, total_error, evaluations};
}

void check_options(const QuadOptions& options) {
  if (!(options.rel_tol > 0.0) && !(options.abs_tol > 0.0)) {
    throw DomainError("quadrature tolerance must be positive");
  }
}

}  // namespace

QuadResult integrate_singular(const SingularIntegrand& f, double a, double b, double tol) {
  if (!(tol > 0.0)) throw DomainError("integrate_singular: tol must be positive");
  return integrate_singular(f, a, b, QuadOptions{tol, tol, 2'000'000});
}

QuadResult integrate_singular(const SingularIntegrand& f, double a, double b,
                              const QuadOptions& options) {
  if (!(a < b)) throw DomainError("integrate_singular: requires a < b");
  const double p = f.left_exponent;
  const double q = f.right_exponent;
  if (!(p > -1.0) || !(q > -1.0)) {
    throw DomainError("integrate_singular: endpoint exponents must exceed -1");
  }
  check_options(options);
  const auto& core = f.core;
  std::vector<Mapped> segments;

  if (p == 0.0 && q == 0.0) {
    const double width = b - a;
    segments.emplace_back([&core, a, width](double s) { return width * core(a + width * s); });
  } else if (q == 0.0) {
    // One left-mapped segment over the whole interval.
    const double width = b - a;
    const double r = 1.0 / (1.0 + p);
    const double scale = std::pow(width, p + 1.0) * r;
    segments.emplace_back(
        [&core, a, width, r, scale](double s) { return scale * core(a + width * std::pow(s, r)); });
  } else if (p == 0.0) {
    const double width = b - a;
    const double r = 1.0 / (1.0 + q);
    const double scale = std::pow(width, q + 1.0) * r;
    segments.emplace_back(
        [&core, b, width, r, scale](double s) { return scale * core(b - width * std::pow(s, r)); });
  } else {
    const double half = 0.5 * (b - a);
    const double total = b - a;
    const double rl = 1.0 / (1.0 + p);
    const double rr = 1.0 / (1.0 + q);
    const double scale_l = std::pow(half, p + 1.0) * rl;
    const double scale_r = std::pow(half, q + 1.0) * rr;
    segments.emplace_back([&core, a, half, total, q, rl, scale_l](double s) {
      const double offset = half * std::pow(s, rl);
      return scale_l * core(a + offset) * std::pow(total - offset, q);
    });
    segments.emplace_back([&core, b, half, total, p, rr, scale_r](double s) {
      const double offset = half * std::pow(s, rr);
      return scale_r * core(b - offset) * std::pow(total - offset, p);
    });
  }
  return adaptive(segments, options);
}

QuadResult integrate_tail(const std::function<double(double)>& core, double a,
                          double decay_exponent, double tol) {
  if (!(tol > 0.0)) throw DomainError("integrate_tail: tol must be positive");
  return integrate_tail(core, a, decay_exponent, QuadOptions{tol, tol, 2'000'000});
}

QuadResult integrate_tail(const std::function<double(double)>& core, double a,
                          double decay_exponent, const QuadOptions& options) {
  if (!(decay_exponent < -1.0)) {
    throw DivergentTail("integrate_tail: decay exponent must be below -1");
  }
  if (!(a > 0.0)) throw DomainError("integrate_tail: lower limit must be positive");
  // x = a/s turns core(x) dx into core(a/s) a s^-2 ds ~ s^{-d-2} near s = 0.
  const double d = decay_exponent;
  SingularIntegrand mapped{
      [&core, a, d](double s) { return core(a / s) * a * std::pow(s, d); }, -d - 2.0, 0.0};
  return integrate_singular(mapped, 0.0, 1.0, options);
}

GaussRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_jacobi: n must be positive");
  if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
  // Three-term recurrence of the monic Jacobi polynomials.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  const double ab = a + b;
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    jac(k, k) = k == 0 ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double j = k + 1.0;
      const double sj = 2.0 * j + ab;
      const double beta =
          j == 1.0 ? 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
                   : 4.0 * j * (j + a) * (j + b) * (j + ab) / (sj * sj * (sj + 1.0) * (sj - 1.0));
      jac(k, k + 1) = jac(k + 1, k) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + log_gamma_fn(a + 1.0) +
                              log_gamma_fn(b + 1.0) - log_gamma_fn(ab + 2.0));
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  return rule;
}

}  // namespace gfbm
