#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "gfbm/params.hpp"

namespace gfbm {

enum class Process { X, Y };

const char* process_name(Process p);

/// G(s, x) = ((s - x)_+^alpha - (-x)_+^alpha) |x|^{-gamma/2}.
/// Zero for s <= 0. At x = 0 returns s^alpha when gamma = 0 and throws
/// SingularPoint when gamma > 0 and s > 0.
double kernel_g(const ProcessParams& params, double s, double x);

/// Kernel bound to a parameter triple. Construction checks that G(1, .) has
/// finite positive L2 norm.
class KernelEval {
 public:
  explicit KernelEval(const ProcessParams& params);
  double operator()(double s, double x) const { return kernel_g(params_, s, x); }
  const ProcessParams& params() const noexcept { return params_; }
  double probe_norm_sq() const noexcept { return probe_norm_sq_; }

 private:
  ProcessParams params_;
  double probe_norm_sq_;
};

struct CovValue {
  double value = 0.0;
  double abs_error = 0.0;
};

/// E[X(u) X(v)] = J1 + J2, with J1 over [0, min(u,v)] and J2 split at x = 1.
/// tol is relative, with an absolute floor of tol * (u v)^H.
CovValue cov_x_detailed(const ProcessParams& params, double u, double v, double tol);
double cov_x(const ProcessParams& params, double u, double v, double tol = 1e-9);

/// E[Y(s) Y(t)] from the kernel of Y:
///   K_t(x) = Gamma(alpha+1)/Gamma(alpha+theta+1) x^{-gamma/2} (t-x)^{alpha+theta}, 0 < x < t
///   K_t(-y) = y^{-gamma/2} Gamma(theta)^{-1} int_0^t (t-w)^{theta-1} ((w+y)^alpha - y^alpha) dw
/// so that cov_y = int K_s K_t over the real line.
CovValue cov_y_detailed(const ProcessParams& params, double s, double t, double tol);
double cov_y(const ProcessParams& params, double s, double t, double tol = 1e-9);

/// k_t(y) = Gamma(theta)^{-1} int_0^t (t-w)^{theta-1} ((w+y)^alpha - y^alpha) dw, y > 0.
double y_left_kernel(const ProcessParams& params, double t, double y);

/// Same quantity as cov_y by tensor-product quadrature of cov_x against
/// (s-u)^{theta-1} (t-v)^{theta-1} / Gamma(theta)^2. Much slower.
double cov_y_tensor(const ProcessParams& params, double s, double t, double tol = 1e-7);

struct CovMatrix {
  std::vector<double> grid;
  Eigen::MatrixXd entries;
  Process process;
  double max_quad_error;
  ProcessParams params;
};

/// PerEntry calls cov_x / cov_y for every pair of the upper triangle.
/// Panels builds the whole matrix from Gauss rules split at the grid times
/// (Gram products plus one Jacobi panel per row), then audits the diagonal and
/// a few rows against PerEntry; the audit discrepancy plus the reference
/// error estimates give max_quad_error. If the audit exceeds 100 tol it falls
/// back to PerEntry. Auto uses Panels from 16 grid points up.
enum class CovMethod { Auto, PerEntry, Panels };

/// Symmetric by construction. workers <= 1 runs serially; results do not
/// depend on the worker count.
CovMatrix cov_matrix(const ProcessParams& params, const std::vector<double>& grid, Process which,
                     double tol = 1e-9, int workers = 1, CovMethod method = CovMethod::Auto);

/// e^{-(H+theta) t} E[Y(e^t) Y(1)], evaluated as e^{(H+theta) t} cov_y(1, e^{-t}).
double lamperti_autocov(const ProcessParams& params, double t, double tol = 1e-9);

/// Decay rate min(alpha + 1/2 - gamma/2, 1/2 - gamma/2 - delta (1 - alpha)) at
/// the midpoint delta of ((alpha - gamma)_+ / (1 - alpha), (1/2 - gamma/2) / (1 - alpha)).
double lamperti_rate_bound(const ProcessParams& params);

/// Header row of grid times, then one row per grid time.
void write_cov_csv(const CovMatrix& cov, std::ostream& out);

/// Throws DomainError unless grid is nonempty, strictly increasing and positive.
void check_grid(const std::vector<double>& grid);

}  // namespace gfbm
