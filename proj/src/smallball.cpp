#include "gfbm/smallball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "gfbm/errors.hpp"
#include "gfbm/quadrature.hpp"

namespace gfbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double neg_log(double p) { return 0.0 - std::log(p); }

std::vector<double> uniform_grid(std::size_t n, double t) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = t * static_cast<double>(i + 1) / static_cast<double>(n);
  return grid;
}

void check_eps_list(const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw DomainError("estimate_phi: eps_list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || !std::isfinite(eps_list[i])) throw DomainError("estimate_phi: eps must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("estimate_phi: eps_list must be decreasing");
  }
}

std::vector<SmallBallEstimate> defined_sorted(const std::vector<SmallBallEstimate>& estimates) {
  std::vector<SmallBallEstimate> out;
  for (const auto& e : estimates) {
    if (e.psi_defined) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  return out;
}

double log_log_abs(double t) { return std::log(std::abs(std::log(t))); }

}  // namespace

SmallBallEstimate make_estimate(double epsilon, std::size_t hits, std::size_t n) {
  SmallBallEstimate e;
  e.epsilon = epsilon;
  e.n = n;
  e.hits = hits;
  e.phat = static_cast<double>(hits) / static_cast<double>(n);
  const Interval ci = wilson_interval(hits, n);
  e.ci_low = ci.low;
  e.ci_high = ci.high;
  e.psi_defined = hits > 0;
  e.psi = hits > 0 ? neg_log(e.phat) : kInf;
  e.psi_low = neg_log(e.ci_high);
  e.psi_high = e.ci_low > 0.0 ? neg_log(e.ci_low) : kInf;
  return e;
}

std::vector<SmallBallEstimate> estimate_phi_from_sups(const std::vector<double>& sups,
                                                      const std::vector<double>& eps_list) {
  if (sups.empty()) throw DomainError("estimate_phi: no paths");
  check_eps_list(eps_list);
  std::vector<SmallBallEstimate> out;
  for (double eps : eps_list) {
    const auto hits = static_cast<std::size_t>(std::count_if(sups.begin(), sups.end(), [eps](double s) { return s <= eps; }));
    out.push_back(make_estimate(eps, hits, sups.size()));
  }
  return out;
}

std::vector<SmallBallEstimate> estimate_phi(const ProcessParams& params, const std::vector<double>& eps_list,
                                            std::size_t n_paths, std::size_t grid_n, std::uint64_t seed,
                                            const PhiOptions& options) {
  check_eps_list(eps_list);
  if (grid_n < 1024) throw DomainError("estimate_phi: grid_n must be >= 1024");
  if (n_paths == 0) throw DomainError("estimate_phi: n_paths must be >= 1");
  const bool bridge = options.sup_mode == SupMode::BrownianBridge;
  if (bridge && (params.gamma() != 0.0 || params.alpha() != 0.0 || options.process != Process::X)) {
    throw DomainError("estimate_phi: the Brownian bridge correction needs X with gamma = alpha = 0");
  }
  const std::vector<double> grid = uniform_grid(grid_n, 1.0);
  const CovMatrix cov = cov_matrix(params, grid, options.process, options.cov_tol, options.workers);
  const FactorizedCov factor = factorize(cov);
  const std::size_t n_eps = eps_list.size();
  std::vector<double> sups(n_paths);
  std::vector<double> survival(bridge ? n_paths * n_eps : 0);
  stream_gaussian(factor, n_paths, seed, options.workers, [&](std::size_t first, const RowMatrix& rows) {
    for (Eigen::Index r = 0; r < rows.rows(); ++r) sups[first + r] = rows.row(r).cwiseAbs().maxCoeff();
    if (bridge) {
      for (std::size_t e = 0; e < n_eps; ++e) {
        const auto p = brownian_band_survival(grid, rows, 1.0, eps_list[e]);
        for (std::size_t r = 0; r < p.size(); ++r) survival[(first + r) * n_eps + e] = p[r];
      }
    }
  });
  if (!bridge) return estimate_phi_from_sups(sups, eps_list);

  std::vector<SmallBallEstimate> out;
  const double n = static_cast<double>(n_paths);
  for (std::size_t e = 0; e < n_eps; ++e) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n_paths; ++r) {
      const double p = survival[r * n_eps + e];
      sum += p;
      sum_sq += p * p;
      if (sups[r] < eps_list[e]) ++hits;
    }
    SmallBallEstimate est;
    est.epsilon = eps_list[e];
    est.n = n_paths;
    est.hits = hits;
    est.phat = sum / n;
    const double var = n_paths > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
    const double half = kZ95 * std::sqrt(var / n);
    est.ci_low = std::max(0.0, est.phat - half);
    est.ci_high = std::min(1.0, est.phat + half);
    est.psi_defined = est.phat > 0.0;
    est.psi = est.psi_defined ? neg_log(est.phat) : kInf;
    est.psi_low = neg_log(est.ci_high);
    est.psi_high = est.ci_low > 0.0 ? neg_log(est.ci_low) : kInf;
    out.push_back(est);
  }
  return out;
}

ExponentFit fit_exponent(const std::vector<SmallBallEstimate>& estimates) {
  std::vector<double> x, y, sd;
  double eps_min = kInf, eps_max = 0.0;
  for (const auto& e : estimates) {
    if (!e.psi_defined || !(e.psi > 0.0) || !std::isfinite(e.psi_high)) continue;
    x.push_back(std::log(1.0 / e.epsilon));
    y.push_back(std::log(e.psi));
    sd.push_back((e.psi_high - e.psi_low) / (2.0 * kZ95 * e.psi));
    eps_min = std::min(eps_min, e.epsilon);
    eps_max = std::max(eps_max, e.epsilon);
  }
  if (x.size() < 4) throw InsufficientData("fit_exponent: need at least 4 estimates with 0 < psi < inf");
  const bool all_exact = std::all_of(sd.begin(), sd.end(), [](double s) { return s == 0.0; });
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = all_exact ? 1.0 : 1.0 / std::max(sd[i] * sd[i], 1e-24);
  const LinearFit fit = weighted_linear_fit(x, y, w);
  return {fit.slope, fit.intercept, fit.slope_stderr, fit.r2, eps_min, eps_max, x.size()};
}

PsiAudit audit_psi_properties(const std::vector<SmallBallEstimate>& estimates, double beta) {
  if (!(beta > 0.0)) throw DomainError("audit_psi_properties: beta must be > 0");
  const auto e = defined_sorted(estimates);
  if (e.size() < 3) throw InsufficientData("audit_psi_properties: need at least 3 estimates with defined psi");
  PsiAudit audit;
  const double inv_beta = 1.0 / beta;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (e[i].psi_high < e[j].psi_low) {
        audit.monotone = false;
        audit.violations.push_back({"monotone", e[i].epsilon, e[j].epsilon, e[j].psi_low - e[i].psi_high});
      }
      const double gi = std::pow(e[i].epsilon, -inv_beta) * e[i].ci_low;
      const double gj = std::pow(e[j].epsilon, -inv_beta) * e[j].ci_high;
      if (gi > gj) {
        audit.growth = false;
        audit.violations.push_back({"growth", e[i].epsilon, e[j].epsilon, gi - gj});
      }
    }
  }
  audit.k1_min = 1.0;
  audit.k1_point = 1.0;
  for (const auto& s : e) {
    const double scale = std::pow(s.epsilon, inv_beta);
    const double lo = s.psi_low * scale, hi = s.psi_high * scale;
    const double need = (lo <= 1.0 && 1.0 <= hi) ? 1.0 : (hi < 1.0 ? 1.0 / hi : lo);
    audit.k1_min = std::max(audit.k1_min, need);
    const double r = s.psi * scale;
    audit.k1_point = std::max(audit.k1_point, std::max(r, 1.0 / r));
  }
  audit.sandwich = std::isfinite(audit.k1_min);
  for (std::size_t i = 1; i + 1 < e.size(); ++i) {
    const double lam = (e[i + 1].epsilon - e[i].epsilon) / (e[i + 1].epsilon - e[i - 1].epsilon);
    const double chord = lam * e[i - 1].psi_high + (1.0 - lam) * e[i + 1].psi_high;
    if (e[i].psi_low > chord) {
      audit.convex = false;
      audit.violations.push_back({"convexity", e[i - 1].epsilon, e[i + 1].epsilon, e[i].psi_low - chord});
    }
  }
  return audit;
}

PhiModel PhiModel::analytic(double kappa, double beta) {
  if (!(kappa > 0.0) || !(beta > 0.0)) throw DomainError("PhiModel: kappa and beta must be > 0");
  return PhiModel([kappa, beta](double log_eps) { return -kappa * std::exp(-log_eps / beta); });
}

PhiModel PhiModel::tabulated(const std::vector<SmallBallEstimate>& estimates) {
  std::vector<double> lx, ly;
  for (const auto& e : defined_sorted(estimates)) {
    if (!(e.psi > 0.0)) continue;
    lx.push_back(std::log(e.epsilon));
    ly.push_back(std::log(e.psi));
  }
  if (lx.size() < 2) throw InsufficientData("PhiModel: need at least 2 estimates with psi > 0");
  return PhiModel([lx, ly](double log_eps) {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(lx.begin(), lx.end(), log_eps) - lx.begin());
    k = std::clamp<std::size_t>(k, 1, lx.size() - 1);
    const double slope = (ly[k] - ly[k - 1]) / (lx[k] - lx[k - 1]);
    return -std::exp(ly[k - 1] + slope * (log_eps - lx[k - 1]));
  });
}

std::function<double(double)> chung_boundary(double lambda, const DerivedExponents& exponents) {
  if (!(lambda > 0.0)) throw DomainError("chung_boundary: lambda must be > 0");
  const double log_lambda = std::log(lambda);
  const double beta = exponents.beta;
  return [log_lambda, beta](double log_t) { return log_lambda - beta * std::log(std::log(std::abs(log_t))); };
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Converges: return "converges";
    case Verdict::Diverges: return "diverges";
    default: return "inconclusive";
  }
}

IntegralTestResult eval_integral_test(const IntegralTestSpec& spec, const DerivedExponents& exponents,
                                      const IntegralTestOptions& options) {
  if (!spec.log_ratio) throw DomainError("eval_integral_test: missing boundary");
  if (options.horizon < 6) throw DomainError("eval_integral_test: horizon must be >= 6");
  const double inv_beta = 1.0 / exponents.beta;
  const double y = exponents.y_index;
  const double sign = spec.endpoint == Endpoint::Zero ? -1.0 : 1.0;
  auto log_t = [sign](double u) { return sign * std::exp(u); };
  const double u_end = 1.0 + options.horizon;

  // Precondition: xi nondecreasing and the ratio bounded, on 10^3 sampled times.
  constexpr int kSamples = 1000;
  std::vector<double> ls(kSamples), lr(kSamples);
  for (int j = 0; j < kSamples; ++j) {
    ls[j] = log_t(1.0 + (u_end - 1.0) * j / (kSamples - 1));
    lr[j] = spec.log_ratio(ls[j]);
    if (!std::isfinite(lr[j])) throw DomainError("eval_integral_test: boundary is not finite on the domain");
    if (lr[j] > std::log(options.ratio_cap)) {
      throw UnboundedRatio("eval_integral_test: xi(t)/t^{H+theta} exceeds " + std::to_string(options.ratio_cap));
    }
  }
  for (int j = 1; j < kSamples; ++j) {
    // log xi(t_j) - log xi(t_{j-1}), arranged so that t increases
    double d_ratio = lr[j] - lr[j - 1];
    double d_power = y * (ls[j] - ls[j - 1]);
    if (sign < 0) {
      d_ratio = -d_ratio;
      d_power = -d_power;
    }
    if (d_ratio + d_power < -1e-12 * (std::abs(d_ratio) + std::abs(d_power))) {
      throw DomainError("eval_integral_test: xi is not nondecreasing");
    }
  }

  auto integrand = [&](double u) {
    const double log_r = spec.log_ratio(log_t(u));
    return std::exp(-log_r * inv_beta + spec.phi_model.log_phi(log_r) + u);
  };

  IntegralTestResult result;
  double partial = 0.0;
  for (int k = 1; k <= options.horizon; ++k) {
    const double a = static_cast<double>(k), b = a + 1.0;
    const double inc = integrate_singular(SingularIntegrand{integrand, 0.0, 0.0}, a, b,
                                          QuadOptions{1e-10, 1e-300, 400'000})
                           .value;
    partial += inc;
    result.increments.push_back(inc);
    result.partial_values.push_back(partial);
    result.domain_u.push_back(b);
    const auto& d = result.increments;
    const std::size_t n = d.size();
    if (n >= 4) {
      bool decaying = true;
      for (std::size_t j = n - 3; j < n; ++j) decaying = decaying && 1.5 * d[j] <= d[j - 1];
      if (decaying && d[n - 1] <= 1e-6 * partial) {
        result.verdict = Verdict::Converges;
        return result;
      }
    }
    if (n >= 6) {
      bool growing = true;
      for (std::size_t j = n - 5; j < n; ++j) growing = growing && d[j] > 0.0 && d[j] >= d[j - 1];
      if (growing) {
        result.verdict = Verdict::Diverges;
        return result;
      }
    }
  }
  result.verdict = Verdict::Inconclusive;
  return result;
}

ChungSeries rescore(const ChungSeries& series, double exponent) {
  ChungSeries out = series;
  out.exponent = exponent;
  const auto n = series.scaled_sup.rows();
  const auto kk = series.scaled_sup.cols();
  out.statistic.resize(n, kk);
  out.running_min.resize(n, kk);
  for (Eigen::Index k = 0; k < kk; ++k) {
    const double factor = std::pow(log_log_abs(series.times[k]), exponent);
    for (Eigen::Index r = 0; r < n; ++r) {
      out.statistic(r, k) = series.scaled_sup(r, k) * factor;
      out.running_min(r, k) = k == 0 ? out.statistic(r, k) : std::min(out.running_min(r, k - 1), out.statistic(r, k));
    }
  }
  out.median_running_min.assign(kk, 0.0);
  out.median_scaled_sup.assign(kk, 0.0);
  for (Eigen::Index k = 0; k < kk; ++k) {
    std::vector<double> col(out.running_min.col(k).begin(), out.running_min.col(k).end());
    out.median_running_min[k] = median(col);
    std::vector<double> sc(series.scaled_sup.col(k).begin(), series.scaled_sup.col(k).end());
    out.median_scaled_sup[k] = median(sc);
  }
  std::vector<double> last(out.running_min.col(kk - 1).begin(), out.running_min.col(kk - 1).end());
  out.final_min_p05 = quantile(last, 0.05);
  out.final_min_p95 = quantile(last, 0.95);
  return out;
}

ChungSeries chung_statistic(const ProcessParams& params, int k_max, std::size_t n_paths, std::uint64_t seed,
                            Endpoint endpoint, const ChungOptions& options) {
  if (k_max < 4) throw DomainError("chung_statistic: k_max must be >= 4");
  if (n_paths == 0) throw DomainError("chung_statistic: n_paths must be >= 1");
  if (options.points_per_octave < 2 || options.extra_octaves < 0) {
    throw DomainError("chung_statistic: bad grid options");
  }
  const DerivedExponents ex = derive(params);
  const double t0 = std::exp(endpoint == Endpoint::Zero ? -std::numbers::e : std::numbers::e);
  ChungSeries series;
  series.endpoint = endpoint;
  for (int k = 0; k <= k_max; ++k) series.times.push_back(std::ldexp(t0, endpoint == Endpoint::Zero ? -k : k));
  const double t_min = *std::min_element(series.times.begin(), series.times.end());
  const double t_max = *std::max_element(series.times.begin(), series.times.end());

  const int per = options.points_per_octave;
  const double bottom = std::ldexp(t_min, -options.extra_octaves);
  std::vector<double> grid;
  for (int i = 1; i <= per; ++i) grid.push_back(bottom * i / per);
  for (double lo = bottom; lo < t_max; lo *= 2.0) {
    for (int i = 1; i <= per; ++i) grid.push_back(lo + lo * i / per);
  }
  std::vector<Eigen::Index> index(series.times.size());
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    index[k] = std::lower_bound(grid.begin(), grid.end(), series.times[k]) - grid.begin();
    if (grid[index[k]] != series.times[k]) throw DomainError("chung_statistic: grid misses a target time");
  }
  series.grid_points = grid.size();
  series.grid_too_coarse = static_cast<int>(index[std::min_element(series.times.begin(), series.times.end()) -
                                                  series.times.begin()]) + 1 < 64;

  const CovMatrix cov = cov_matrix(params, grid, Process::Y, options.cov_tol, options.workers);
  const FactorizedCov factor = factorize(cov);
  const auto kk = static_cast<Eigen::Index>(series.times.size());
  series.scaled_sup.resize(static_cast<Eigen::Index>(n_paths), kk);
  std::vector<double> norm(series.times.size());
  for (std::size_t k = 0; k < norm.size(); ++k) norm[k] = std::pow(series.times[k], -ex.y_index);
  // (grid column, k) pairs in column order, for one pass per path
  std::vector<std::pair<Eigen::Index, Eigen::Index>> targets;
  for (Eigen::Index k = 0; k < kk; ++k) targets.emplace_back(index[k], k);
  std::sort(targets.begin(), targets.end());
  stream_gaussian(factor, n_paths, seed, options.workers, [&](std::size_t first, const RowMatrix& rows) {
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      double running = 0.0;
      Eigen::Index c = 0;
      for (const auto& [col, k] : targets) {
        for (; c <= col; ++c) running = std::max(running, std::abs(rows(r, c)));
        series.scaled_sup(static_cast<Eigen::Index>(first) + r, k) = running * norm[k];
      }
    }
  });
  return rescore(series, ex.beta);
}

ProbeReport maximal_inequality_probe(const ProcessParams& params, double t, double u, double nu, double eta,
                                     std::size_t n_paths, std::uint64_t seed, const ProbeOptions& options) {
  if (!(t > 0.0) || !(u >= t) || !(nu > 0.0) || !(eta > 0.0) || !std::isfinite(u) || n_paths == 0) {
    throw DomainError("maximal_inequality_probe: need 0 < t <= u, nu > 0, eta > 0, n_paths >= 1");
  }
  if (options.grid_n < 64) throw DomainError("maximal_inequality_probe: grid_n must be >= 64");
  const DerivedExponents ex = derive(params);
  std::size_t n_t = options.grid_n;
  std::vector<double> grid;
  if (u > t) {
    n_t = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(options.grid_n * t / u)), 32,
                                  options.grid_n - 1);
  }
  grid = uniform_grid(n_t, t);
  if (u > t) {
    const std::size_t rest = options.grid_n - n_t;
    for (std::size_t i = 1; i < rest; ++i) grid.push_back(t + (u - t) * static_cast<double>(i) / static_cast<double>(rest));
    grid.push_back(u);
  }
  const CovMatrix cov = cov_matrix(params, grid, Process::Y, options.cov_tol, options.workers);
  const FactorizedCov factor = factorize(cov);
  std::vector<double> m_t(n_paths), m_u(n_paths);
  stream_gaussian(factor, n_paths, seed, options.workers, [&](std::size_t first, const RowMatrix& rows) {
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      m_t[first + r] = rows.row(r).head(static_cast<Eigen::Index>(n_t)).cwiseAbs().maxCoeff();
      m_u[first + r] = rows.row(r).cwiseAbs().maxCoeff();
    }
  });

  ProbeReport rep;
  rep.t = t;
  rep.u = u;
  rep.nu = nu;
  rep.eta = eta;
  rep.n = n_paths;
  const double level_t = nu * std::pow(t, ex.y_index);
  const double level_eta = eta * std::pow(u, ex.y_index);
  for (std::size_t r = 0; r < n_paths; ++r) {
    const bool in_t = m_t[r] <= level_t;
    const bool in_u = m_u[r] <= eta;
    rep.hits_t += in_t;
    rep.hits_u += in_u;
    rep.joint_hits += in_t && in_u;
    rep.hits_eta += m_u[r] <= level_eta;
  }
  if (rep.joint_hits == 0) throw ZeroHits("maximal_inequality_probe: the joint event never occurred");
  const double n = static_cast<double>(n_paths);
  rep.joint = rep.joint_hits / n;
  rep.joint_ci = wilson_interval(rep.joint_hits, n_paths);
  rep.phi_nu = rep.hits_t / n;
  rep.phi_eta = rep.hits_eta / n;
  const double scale = (u - t) * std::pow(u, -params.gamma() / (2.0 * ex.beta)) * std::pow(eta, -1.0 / ex.beta);
  rep.decay_ratio = std::log(rep.joint) / scale;
  rep.product_ratio = rep.joint / (rep.phi_nu * rep.phi_eta);
  rep.degenerate = rep.joint_hits == n_paths || rep.hits_t == 0 || rep.hits_eta == 0 || !(scale > 0.0);
  return rep;
}

}  // namespace gfbm
