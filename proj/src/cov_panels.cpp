// Whole-matrix covariance assembly from shared Gauss rules.
//
// Both processes have kernels of the form
//   K_t(x) = c x^{-gamma/2} (t - x)^e        for 0 < x < t
//   K_t(-y) = y^{-gamma/2} L(t, y)          for y > 0
// (X: e = alpha, c = 1, L = (t+y)^alpha - y^alpha; Y: e = alpha + theta,
// c = Gamma(alpha+1)/Gamma(alpha+theta+1), L = k_t). The positive half-line
// integral is split at the grid times; panels strictly left of min(t_i, t_j)
// form a Gram matrix, and the panel ending at min(t_i, t_j) carries a
// Gauss-Jacobi weight for (t_i - x)^e. The negative half-line uses node sets
// shared by every grid time, so it reduces to Gram-type products as well.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "covariance_internal.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/parallel.hpp"
#include "gfbm/quadrature.hpp"
#include "gfbm/special.hpp"

namespace gfbm::detail {

namespace {

constexpr int kPlainOrder = 12;
constexpr int kJacobiOrder = 16;
constexpr int kGeometricOrder = 16;
constexpr double kFarDepth = 0x1p30;
constexpr std::size_t kBlockNodes = 2048;

struct Node {
  double x;
  double w;
  std::size_t interval;
};

// Sub-panels of [a, b] such that every listed point lies at least half a
// panel width away, except a point sitting exactly on a flagged endpoint of
// the sub-panel that touches it.
void split_panel(double a, double b, const std::vector<double>& points, double handled_left,
                 double handled_right, int depth, std::vector<std::pair<double, double>>& out) {
  const double w = b - a;
  bool ok = depth >= 200;
  if (!ok) {
    ok = true;
    for (double s : points) {
      if (s == a && s == handled_left) continue;
      if (s == b && s == handled_right) continue;
      const double d = s < a ? a - s : (s > b ? s - b : 0.0);
      if (d < 0.5 * w) {
        ok = false;
        break;
      }
    }
  }
  if (ok) {
    out.emplace_back(a, b);
    return;
  }
  const double mid = 0.5 * (a + b);
  split_panel(a, mid, points, handled_left, handled_right, depth + 1, out);
  split_panel(mid, b, points, handled_left, handled_right, depth + 1, out);
}

void append_legendre(const GaussRule& gl, double a, double b, std::vector<std::pair<double, double>>& xw) {
  const double half = 0.5 * (b - a);
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    xw.emplace_back(a + half * (1.0 + gl.nodes[k]), half * gl.weights[k]);
  }
}

}  // namespace

PanelAssembly assemble_panels(const KernelShape& shape, const std::vector<double>& grid,
                              int workers) {
  const std::size_t m = grid.size();
  const double gamma = shape.gamma;
  const double e = shape.e;
  const GaussRule gl_plain = gauss_jacobi(kPlainOrder, 0.0, 0.0);
  const GaussRule gl_geo = gauss_jacobi(kGeometricOrder, 0.0, 0.0);
  const GaussRule gj_zero = gauss_jacobi(kJacobiOrder, 0.0, -gamma);
  const GaussRule gj_right = gauss_jacobi(kJacobiOrder, e, 0.0);
  const GaussRule gj_both = gauss_jacobi(kJacobiOrder, e, -gamma);

  Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(m, m);

  // Plain rules: nodes on interval k integrate phi(x) x^{-gamma} for phi smooth there.
  std::vector<Node> plain;
  for (std::size_t k = 0; k < m; ++k) {
    const double lo = k == 0 ? 0.0 : grid[k - 1];
    const double hi = grid[k];
    if (k + 1 == m) break;  // no row lies strictly to the right of the last interval
    if (k == 0) {
      // x^{-gamma} weight at 0; the nearest row singularity is grid[1].
      std::vector<std::pair<double, double>> parts;
      split_panel(lo, hi, {0.0, grid[1]}, 0.0, -1.0, 0, parts);
      for (const auto& [a, b] : parts) {
        if (a == 0.0) {
          const double half = 0.5 * b;
          const double scale = std::pow(half, 1.0 - gamma);
          for (int q = 0; q < kJacobiOrder; ++q) {
            plain.push_back({half * (1.0 + gj_zero.nodes[q]), scale * gj_zero.weights[q], k});
          }
        } else {
          std::vector<std::pair<double, double>> xw;
          append_legendre(gl_plain, a, b, xw);
          for (const auto& [x, w] : xw) plain.push_back({x, w * std::pow(x, -gamma), k});
        }
      }
      continue;
    }
    std::vector<std::pair<double, double>> parts;
    split_panel(lo, hi, {0.0, grid[k + 1]}, -1.0, -1.0, 0, parts);
    for (const auto& [a, b] : parts) {
      std::vector<std::pair<double, double>> xw;
      append_legendre(gl_plain, a, b, xw);
      for (const auto& [x, w] : xw) plain.push_back({x, w * std::pow(x, -gamma), k});
    }
  }

  // Gram accumulation over node blocks; rows with grid index <= interval get zeros.
  for (std::size_t start = 0; start < plain.size(); start += kBlockNodes) {
    const std::size_t stop = std::min(plain.size(), start + kBlockNodes);
    const std::size_t row0 = plain[start].interval + 1;
    const std::size_t rows = m - row0;
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(rows, stop - start);
    parallel_for(rows, workers, [&](std::size_t r) {
      const std::size_t i = row0 + r;
      for (std::size_t n = start; n < stop; ++n) {
        const Node& nd = plain[n];
        if (nd.interval >= i) break;  // intervals are nondecreasing along the node list
        block(r, n - start) = std::sqrt(nd.w) * std::pow(grid[i] - nd.x, e);
      }
    });
    pos.bottomRightCorner(rows, rows).selfadjointView<Eigen::Lower>().rankUpdate(block);
  }

  // Own interval of row i: weight (t_i - x)^e at the right end.
  parallel_for(m, workers, [&](std::size_t i) {
    const double lo = i == 0 ? 0.0 : grid[i - 1];
    const double hi = grid[i];
    std::vector<double> points = {0.0, hi};
    if (i + 1 < m) points.push_back(grid[i + 1]);
    std::vector<std::pair<double, double>> parts;
    split_panel(lo, hi, points, i == 0 ? 0.0 : -1.0, hi, 0, parts);
    std::vector<std::pair<double, double>> xw;  // weight includes x^{-gamma} (t_i - x)^e
    for (const auto& [a, b] : parts) {
      const double half = 0.5 * (b - a);
      if (a == 0.0 && b == hi) {
        const double scale = std::pow(half, 1.0 - gamma + e);
        for (int q = 0; q < kJacobiOrder; ++q) {
          xw.emplace_back(half * (1.0 + gj_both.nodes[q]), scale * gj_both.weights[q]);
        }
      } else if (b == hi) {
        const double scale = std::pow(half, 1.0 + e);
        for (int q = 0; q < kJacobiOrder; ++q) {
          const double x = a + half * (1.0 + gj_right.nodes[q]);
          xw.emplace_back(x, scale * gj_right.weights[q] * std::pow(x, -gamma));
        }
      } else if (a == 0.0) {
        const double scale = std::pow(half, 1.0 - gamma);
        for (int q = 0; q < kJacobiOrder; ++q) {
          const double x = half * (1.0 + gj_zero.nodes[q]);
          xw.emplace_back(x, scale * gj_zero.weights[q] * std::pow(hi - x, e));
        }
      } else {
        std::vector<std::pair<double, double>> raw;
        append_legendre(gl_plain, a, b, raw);
        for (const auto& [x, w] : raw) {
          xw.emplace_back(x, w * std::pow(x, -gamma) * std::pow(hi - x, e));
        }
      }
    }
    for (std::size_t j = i + 1; j < m; ++j) {
      double sum = 0.0;
      for (const auto& [x, w] : xw) sum += w * std::pow(grid[j] - x, e);
      pos(j, i) += sum;
    }
    pos(i, i) = std::pow(hi, 1.0 - gamma + 2.0 * e) * beta_fn(1.0 - gamma, 1.0 + 2.0 * e);
  });

  PanelAssembly out;
  out.entries = pos.selfadjointView<Eigen::Lower>();
  out.entries *= shape.amp2;

  if (shape.left) {
    // Negative half-line. On [0, near] L = P + y^alpha Q with P, Q smooth, so
    // the three power weights y^{-gamma}, y^{alpha-gamma}, y^{2 alpha-gamma}
    // each get their own Jacobi rule. Then dyadic Legendre panels up to far,
    // and a Jacobi rule in s = far/y for the tail.
    const double alpha = shape.alpha;
    const double near = 0.25 * grid.front();
    const int doublings = static_cast<int>(std::ceil(std::log2(grid.back() * kFarDepth / near)));
    const double far = std::ldexp(near, doublings);
    const double q = gamma - 2.0 * alpha;

    auto near_rule = [&](double power) {
      const GaussRule gj = gauss_jacobi(kJacobiOrder, 0.0, power);
      const double half = 0.5 * near;
      const double scale = std::pow(half, 1.0 + power);
      std::vector<std::pair<double, double>> xw;
      for (int k = 0; k < kJacobiOrder; ++k) {
        xw.emplace_back(half * (1.0 + gj.nodes[k]), scale * gj.weights[k]);
      }
      return xw;
    };
    const auto r1 = near_rule(-gamma);
    const auto r2 = near_rule(alpha - gamma);
    const auto r3 = near_rule(2.0 * alpha - gamma);
    Eigen::MatrixXd p1(m, kJacobiOrder), p2(m, kJacobiOrder), q2(m, kJacobiOrder),
        q3(m, kJacobiOrder);
    parallel_for(m, workers, [&](std::size_t i) {
      for (int n = 0; n < kJacobiOrder; ++n) {
        p1(i, n) = std::sqrt(r1[n].second) * shape.left_p(grid[i], r1[n].first);
        p2(i, n) = r2[n].second * shape.left_p(grid[i], r2[n].first);
        q2(i, n) = shape.left_q(grid[i], r2[n].first);
        q3(i, n) = std::sqrt(r3[n].second) * shape.left_q(grid[i], r3[n].first);
      }
    });
    Eigen::MatrixXd cross = p2 * q2.transpose();
    Eigen::MatrixXd near_part = p1 * p1.transpose() + q3 * q3.transpose() + cross +
                                cross.transpose();

    std::vector<std::pair<double, double>> yw;  // integrates y^{-gamma} L_u L_v dy
    double a = near;
    for (int k = 0; k < doublings; ++k, a *= 2.0) {
      std::vector<std::pair<double, double>> raw;
      append_legendre(gl_geo, a, 2.0 * a, raw);
      for (const auto& [y, w] : raw) yw.emplace_back(y, w * std::pow(y, -gamma));
    }
    {
      const GaussRule gj = gauss_jacobi(kJacobiOrder, 0.0, q);
      const double scale = std::pow(0.5, 1.0 + q);
      for (int k = 0; k < kJacobiOrder; ++k) {
        const double s = 0.5 * (1.0 + gj.nodes[k]);
        const double y = far / s;
        yw.emplace_back(y, scale * gj.weights[k] * std::pow(y, -gamma) * far / (s * s) *
                               std::pow(s, -q));
      }
    }
    Eigen::MatrixXd left(m, yw.size());
    parallel_for(m, workers, [&](std::size_t i) {
      for (std::size_t n = 0; n < yw.size(); ++n) {
        left(i, n) = std::sqrt(yw[n].second) * shape.left(grid[i], yw[n].first);
      }
    });
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(left);
    Eigen::MatrixXd full = gram.selfadjointView<Eigen::Lower>();
    out.entries += full + near_part;
  }
  // GEMM summation order differs between (i, j) and (j, i); mirror the lower triangle.
  Eigen::MatrixXd sym = out.entries.selfadjointView<Eigen::Lower>();
  out.entries = std::move(sym);
  return out;
}

}  // namespace gfbm::detail
