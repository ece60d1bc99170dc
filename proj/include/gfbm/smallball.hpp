#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfbm/covariance.hpp"
#include "gfbm/params.hpp"
#include "gfbm/sampler.hpp"
#include "gfbm/stats.hpp"

namespace gfbm {

/// phi(eps) = P(M(1) <= eps) with M(t) = sup_[0,t] |process|.
struct SmallBallEstimate {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t hits = 0;
  double phat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool psi_defined = false;  // false when hits = 0 (ZeroHits)
  double psi = 0.0;          // -log phat
  double psi_low = 0.0;      // -log ci_high
  double psi_high = 0.0;     // -log ci_low, infinite when ci_low = 0
};

/// Wilson-interval estimate from a hit count.
SmallBallEstimate make_estimate(double epsilon, std::size_t hits, std::size_t n);

/// GridMax counts paths whose grid sup is <= eps. BrownianBridge is for
/// standard Brownian motion only (X with gamma = alpha = 0): each path
/// contributes P(continuous sup < eps | grid values), which removes the
/// downward bias of the grid sup; hits then counts paths with grid sup < eps
/// and the interval is the normal one for a mean.
enum class SupMode { GridMax, BrownianBridge };

struct PhiOptions {
  Process process = Process::Y;
  SupMode sup_mode = SupMode::GridMax;
  int workers = 1;
  double cov_tol = 1e-9;
};

/// Uniform grid k / grid_n, k = 1..grid_n, Cholesky route. Paths are
/// streamed in chunks; each path's sup is computed once and compared with
/// every eps (common random numbers).
std::vector<SmallBallEstimate> estimate_phi(const ProcessParams& params, const std::vector<double>& eps_list,
                                            std::size_t n_paths, std::size_t grid_n, std::uint64_t seed,
                                            const PhiOptions& options = {});

std::vector<SmallBallEstimate> estimate_phi_from_sups(const std::vector<double>& sups,
                                                      const std::vector<double>& eps_list);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares of log psi on log(1/eps) over estimates with
/// psi > 0; weight 1/sd^2 with sd = (psi_high - psi_low) / (2 z psi).
/// Throws InsufficientData below 4 usable points.
ExponentFit fit_exponent(const std::vector<SmallBallEstimate>& estimates);

struct AuditViolation {
  std::string check;  // "monotone", "growth", "convexity"
  double eps_a;
  double eps_b;
  double margin;      // how far outside the CI slack
};

struct PsiAudit {
  bool monotone = true;     // psi nonincreasing in eps
  bool growth = true;       // eps^{-1/beta} phi increasing in eps
  bool sandwich = true;     // a finite K1 >= 1 exists
  bool convex = true;       // discrete convexity of psi
  double k1_min = 1.0;      // smallest K1 allowed by the psi intervals
  double k1_point = 1.0;    // smallest K1 for the point estimates
  std::vector<AuditViolation> violations;
};

/// Checks on the estimates with defined psi, each up to the width of the
/// intervals: a violation is reported only when the intervals exclude the
/// property. Sandwich: 1/(K1 eps^{1/beta}) <= psi <= K1/eps^{1/beta}.
PsiAudit audit_psi_properties(const std::vector<SmallBallEstimate>& estimates, double beta);

enum class Endpoint { Zero, Infinity };

/// phi as a function of log eps.
class PhiModel {
 public:
  /// exp(-kappa eps^{-1/beta})
  static PhiModel analytic(double kappa, double beta);
  /// Piecewise-linear log psi in log eps through the defined estimates,
  /// extended linearly beyond both ends.
  static PhiModel tabulated(const std::vector<SmallBallEstimate>& estimates);
  double log_phi(double log_eps) const { return fn_(log_eps); }

 private:
  explicit PhiModel(std::function<double(double)> fn) : fn_(std::move(fn)) {}
  std::function<double(double)> fn_;
};

/// The boundary xi enters through log_ratio(L) = log(xi(t) / t^{H+theta}) at
/// L = log t, which stays finite where t itself underflows.
struct IntegralTestSpec {
  std::function<double(double)> log_ratio;
  Endpoint endpoint = Endpoint::Zero;
  PhiModel phi_model = PhiModel::analytic(1.0, 1.0);
};

/// xi_lambda(t) = lambda t^{H+theta} / (ln |ln t|)^beta.
std::function<double(double)> chung_boundary(double lambda, const DerivedExponents& exponents);

enum class Verdict { Converges, Diverges, Inconclusive };
const char* verdict_name(Verdict v);

struct IntegralTestResult {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> partial_values;  // partial integrals over growing domains
  std::vector<double> increments;
  std::vector<double> domain_u;        // upper limits in u = ln ln(1/t) (or ln ln t)
};

struct IntegralTestOptions {
  int horizon = 80;              // number of unit steps in u
  double ratio_cap = 1e6;        // ratio above this counts as unbounded
};

/// Integrates (r)^{-1/beta} phi(r) dt/t, r = xi(t)/t^{H+theta}, over
/// t in (0, e^{-e}] (Zero) or [e^e, inf) (Infinity), in u = ln ln(1/t) resp.
/// ln ln t, on the domains u in [1, 1 + k]. Converges if the last three
/// increments each shrink by a factor >= 1.5 and the last one is <= 1e-6 of
/// the partial integral; diverges if the last five increments are positive
/// and nondecreasing. Throws UnboundedRatio if r exceeds ratio_cap and
/// DomainError if xi is not nondecreasing on 10^3 sampled times.
IntegralTestResult eval_integral_test(const IntegralTestSpec& spec, const DerivedExponents& exponents,
                                      const IntegralTestOptions& options = {});

/// Times t_k = 2^{-k} e^{-e} (Zero) or 2^k e^e (Infinity), k = 0..k_max.
struct ChungSeries {
  Endpoint endpoint = Endpoint::Zero;
  std::vector<double> times;
  double exponent = 0.0;           // power of ln ln used in the statistic
  RowMatrix scaled_sup;            // M(t_k) / t_k^{H+theta}, n x (k_max + 1)
  RowMatrix statistic;             // scaled_sup * (ln ln)^exponent
  RowMatrix running_min;
  std::vector<double> median_scaled_sup;
  std::vector<double> median_running_min;
  double final_min_p05 = 0.0;
  double final_min_p95 = 0.0;
  std::size_t grid_points = 0;
  bool grid_too_coarse = false;    // fewer than 64 grid points in [0, min t_k]
};

struct ChungOptions {
  int points_per_octave = 128;
  int extra_octaves = 6;  // octaves of grid below the smallest t_k
  int workers = 1;
  double cov_tol = 1e-9;
};

/// Y on a geometric grid: points_per_octave uniform points in every octave
/// down to 2^{-extra_octaves} min t_k, plus the same count on the bottom
/// interval. The statistic uses exponent beta.
ChungSeries chung_statistic(const ProcessParams& params, int k_max, std::size_t n_paths, std::uint64_t seed,
                            Endpoint endpoint, const ChungOptions& options = {});

/// Same sups, another power of ln ln.
ChungSeries rescore(const ChungSeries& series, double exponent);

struct ProbeReport {
  double t = 0.0, u = 0.0, nu = 0.0, eta = 0.0;
  std::size_t n = 0;
  std::size_t joint_hits = 0;   // M(t) <= nu t^{H+theta} and M(u) <= eta
  std::size_t hits_t = 0;       // M(t) <= nu t^{H+theta}
  std::size_t hits_u = 0;       // M(u) <= eta
  std::size_t hits_eta = 0;     // M(u) <= eta u^{H+theta}
  double joint = 0.0;
  Interval joint_ci{0.0, 0.0};
  double phi_nu = 0.0;          // hits_t / n
  double phi_eta = 0.0;         // hits_eta / n
  double decay_ratio = 0.0;     // log(joint) / ((u - t) u^{-gamma/(2 beta)} eta^{-1/beta})
  double product_ratio = 0.0;   // joint / (phi_nu phi_eta)
  bool degenerate = false;      // joint = 1 or a factor estimate is 0
};

struct ProbeOptions {
  std::size_t grid_n = 1024;
  int workers = 1;
  double cov_tol = 1e-9;
};

/// Grid on (0, u] with t as a grid point. Throws ZeroHits if the joint event
/// never occurs.
ProbeReport maximal_inequality_probe(const ProcessParams& params, double t, double u, double nu, double eta,
                                     std::size_t n_paths, std::uint64_t seed, const ProbeOptions& options = {});

}  // namespace gfbm
