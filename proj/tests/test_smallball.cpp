#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "gfbm/errors.hpp"
#include "gfbm/smallball.hpp"
#include "gfbm/stats.hpp"

using namespace gfbm;

namespace {

double chung_series(double eps) {
  double s = 0.0;
  for (int k = 0; k < 50; ++k) {
    s += (k % 2 ? -1.0 : 1.0) / (2 * k + 1) *
         std::exp(-(2 * k + 1) * (2 * k + 1) * std::numbers::pi * std::numbers::pi / (8 * eps * eps));
  }
  return 4.0 / std::numbers::pi * s;
}

// Estimate with an exact psi and a symmetric relative band on log psi.
SmallBallEstimate synthetic(double eps, double psi, double rel_sd) {
  SmallBallEstimate e;
  e.epsilon = eps;
  e.n = 1000;
  e.psi_defined = true;
  e.psi = psi;
  e.psi_low = psi * std::exp(-kZ95 * rel_sd);
  e.psi_high = psi * std::exp(kZ95 * rel_sd);
  e.phat = std::exp(-psi);
  e.ci_low = std::exp(-e.psi_high);
  e.ci_high = std::exp(-e.psi_low);
  e.hits = static_cast<std::size_t>(e.phat * 1000);
  return e;
}

DerivedExponents exponents_with_beta(double beta) { return DerivedExponents{0.7, beta, 1.2}; }

}  // namespace

TEST_CASE("Wilson interval") {
  const auto w = wilson_interval(5, 100);
  CHECK(std::abs(w.low - 0.021543) < 1e-5);
  CHECK(std::abs(w.high - 0.111750) < 1e-5);
  const auto zero = wilson_interval(0, 50);
  CHECK(zero.low == 0.0);
  CHECK(zero.high > 0.0);
  const auto all = wilson_interval(50, 50);
  CHECK(all.high == 1.0);
  CHECK(all.low < 1.0);
  CHECK_THROWS_AS(wilson_interval(3, 0), DomainError);
  CHECK_THROWS_AS(wilson_interval(4, 3), DomainError);
}

TEST_CASE("quantiles and KS") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == 1.75);
  CHECK(quantile({5.0}, 0.9) == 5.0);
  std::vector<double> ranks(100);
  for (int i = 0; i < 100; ++i) ranks[i] = 99 - i;
  // ranks 50 -+ 9.8: order statistics 40 and 61 (1-based)
  const auto mi = median_interval(ranks);
  CHECK(mi.low == 39.0);
  CHECK(mi.high == 60.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::vector<double> a(2000), b(3000), c(3000);
  for (auto& v : a) v = z(rng);
  for (auto& v : b) v = z(rng);
  for (auto& v : c) v = z(rng) + 0.3;
  const auto same = ks_two_sample(a, b);
  CHECK(std::abs(same.critical_1pct - 1.628 * std::sqrt(5000.0 / 6e6)) < 1e-12);
  CHECK_FALSE(same.reject_1pct);
  CHECK(ks_two_sample(a, c).reject_1pct);
  CHECK(ks_two_sample({1.0, 2.0}, {3.0, 4.0}).statistic == 1.0);
}

TEST_CASE("make_estimate") {
  const auto e = make_estimate(0.5, 5, 100);
  CHECK(e.phat == 0.05);
  CHECK(e.psi_defined);
  CHECK(std::abs(e.psi + std::log(0.05)) < 1e-15);
  CHECK(e.psi_low < e.psi);
  CHECK(e.psi < e.psi_high);
  const auto none = make_estimate(0.1, 0, 100);
  CHECK_FALSE(none.psi_defined);
  CHECK(none.ci_low == 0.0);
  const auto all = make_estimate(3.0, 100, 100);
  CHECK(all.psi == 0.0);
}

TEST_CASE("estimates from sups share paths") {
  const std::vector<double> sups = {0.1, 0.2, 0.2, 0.5, 0.9, 1.5};
  const auto est = estimate_phi_from_sups(sups, {1.0, 0.5, 0.2, 0.05});
  REQUIRE(est.size() == 4);
  CHECK(est[0].hits == 5);
  CHECK(est[1].hits == 4);
  CHECK(est[2].hits == 3);
  CHECK(est[3].hits == 0);
  CHECK_THROWS_AS(estimate_phi_from_sups(sups, {0.2, 0.5}), DomainError);
}

TEST_CASE("Brownian small ball against the series") {
  auto bm = ProcessParams::validate(0.0, 0.0, 1.0);
  const std::vector<double> eps = {1.0, 0.7};
  PhiOptions grid_opts;
  grid_opts.process = Process::X;
  PhiOptions bridge_opts = grid_opts;
  bridge_opts.sup_mode = SupMode::BrownianBridge;
  const std::size_t n = 20000;
  const auto g = estimate_phi(bm, eps, n, 1024, 31, grid_opts);
  const auto b = estimate_phi(bm, eps, n, 1024, 31, bridge_opts);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double truth = chung_series(eps[i]);
    const double sd = std::sqrt(truth * (1 - truth) / n);
    CHECK(std::abs(b[i].phat - truth) < 4.0 * sd);
    CHECK(b[i].ci_low < truth);
    CHECK(truth < b[i].ci_high);
    // Same paths: the bridge correction can only lower the estimate.
    CHECK(b[i].phat <= g[i].phat);
    CHECK(g[i].hits >= b[i].hits);
  }
  CHECK(g[0].hits >= g[1].hits);

  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  CHECK_THROWS_AS(estimate_phi(p, eps, 10, 1024, 1, bridge_opts), DomainError);
  CHECK_THROWS_AS(estimate_phi(bm, eps, 10, 512, 1, grid_opts), DomainError);
}

TEST_CASE("fit_exponent on synthetic data") {
  std::vector<SmallBallEstimate> exact;
  for (int k = 0; k < 6; ++k) {
    const double eps = std::pow(2.0, -k) * 0.8;
    exact.push_back(synthetic(eps, std::pow(eps, -2.0), 0.0));
  }
  const auto f = fit_exponent(exact);
  CHECK(std::abs(f.slope - 2.0) < 1e-12);
  CHECK(std::abs(f.r2 - 1.0) < 1e-12);
  CHECK(f.points == 6);
  CHECK(f.eps_max == 0.8);

  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  std::vector<SmallBallEstimate> noisy;
  for (int k = 0; k < 8; ++k) {
    const double eps = 1.0 * std::pow(0.7, k);
    noisy.push_back(synthetic(eps, 3.0 * std::pow(eps, -1.0 / 1.2) * (1.0 + 0.05 * z(rng)), 0.05));
  }
  CHECK(std::abs(fit_exponent(noisy).slope - 1.0 / 1.2) < 0.1);

  exact.resize(3);
  CHECK_THROWS_AS(fit_exponent(exact), InsufficientData);
}

TEST_CASE("psi audit") {
  const double beta = 1.2;
  std::vector<SmallBallEstimate> model;
  for (int k = 0; k < 8; ++k) {
    const double eps = 0.9 * std::pow(0.8, k);
    model.push_back(synthetic(eps, std::pow(eps, -1.0 / beta), 0.02));
  }
  const auto ok = audit_psi_properties(model, beta);
  CHECK(ok.monotone);
  CHECK(ok.growth);
  CHECK(ok.sandwich);
  CHECK(ok.convex);
  CHECK(ok.k1_min == 1.0);
  CHECK(std::abs(ok.k1_point - 1.0) < 1e-12);
  CHECK(ok.violations.empty());

  auto scaled = model;
  for (auto& e : scaled) e = synthetic(e.epsilon, 3.0 * e.psi, 0.0);
  const auto k3 = audit_psi_properties(scaled, beta);
  CHECK(std::abs(k3.k1_min - 3.0) < 1e-12);

  auto planted = model;
  planted[2] = synthetic(planted[2].epsilon, 2.0 * planted[4].psi, 0.02);
  const auto bad = audit_psi_properties(planted, beta);
  CHECK_FALSE(bad.monotone);
  CHECK(std::any_of(bad.violations.begin(), bad.violations.end(),
                    [](const AuditViolation& v) { return v.check == "monotone"; }));

  model.resize(2);
  CHECK_THROWS_AS(audit_psi_properties(model, beta), InsufficientData);
}

TEST_CASE("integral test dichotomy on the analytic model") {
  for (Endpoint end : {Endpoint::Zero, Endpoint::Infinity}) {
    for (double kappa : {0.5, 1.0, 2.0}) {
      for (double beta : {0.8, 1.2, 1.5}) {
        const auto ex = exponents_with_beta(beta);
        const double scale = std::pow(kappa, beta);
        IntegralTestSpec lo{chung_boundary(0.5 * scale, ex), end, PhiModel::analytic(kappa, beta)};
        IntegralTestSpec hi{chung_boundary(2.0 * scale, ex), end, PhiModel::analytic(kappa, beta)};
        CAPTURE(kappa);
        CAPTURE(beta);
        CHECK(eval_integral_test(lo, ex).verdict == Verdict::Converges);
        CHECK(eval_integral_test(hi, ex).verdict == Verdict::Diverges);
      }
    }
  }
}

TEST_CASE("integral test edge cases") {
  const auto ex = exponents_with_beta(1.2);
  // xi = t^{H + theta + 1}: ratio t -> 0 at the origin, the integral converges.
  IntegralTestSpec faster{[](double log_t) { return log_t; }, Endpoint::Zero, PhiModel::analytic(1.0, 1.2)};
  const auto r = eval_integral_test(faster, ex);
  CHECK(r.verdict == Verdict::Converges);
  CHECK(r.partial_values.size() == r.increments.size());
  CHECK(std::is_sorted(r.partial_values.begin(), r.partial_values.end()));

  IntegralTestSpec unbounded{[](double log_t) { return -log_t; }, Endpoint::Zero, PhiModel::analytic(1.0, 1.2)};
  CHECK_THROWS_AS(eval_integral_test(unbounded, ex), UnboundedRatio);

  // Bounded ratio whose log slope swings past -(H + theta): xi is not monotone.
  IntegralTestSpec wiggly{[](double log_t) { return 0.5 * std::sin(20.0 * log_t); }, Endpoint::Zero,
                          PhiModel::analytic(1.0, 1.2)};
  CHECK_THROWS_AS(eval_integral_test(wiggly, ex), DomainError);
  IntegralTestOptions short_horizon;
  short_horizon.horizon = 5;
  CHECK_THROWS_AS(eval_integral_test(faster, ex, short_horizon), DomainError);

  std::vector<SmallBallEstimate> table;
  for (double eps : {2.0, 1.0, 0.5, 0.25}) table.push_back(synthetic(eps, std::pow(eps, -1.0 / 1.2), 0.0));
  const auto tab = PhiModel::tabulated(table);
  const auto ana = PhiModel::analytic(1.0, 1.2);
  for (double le : {-3.0, -1.0, 0.3, 2.0}) CHECK(std::abs(tab.log_phi(le) - ana.log_phi(le)) < 1e-12);
  CHECK(std::string(verdict_name(Verdict::Inconclusive)) == "inconclusive");
}

TEST_CASE("Chung statistic") {
  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  const auto ex = derive(p);
  ChungOptions opts;
  opts.points_per_octave = 32;
  const auto s = chung_statistic(p, 4, 200, 9, Endpoint::Zero, opts);
  REQUIRE(s.times.size() == 5);
  CHECK(std::abs(s.times[0] - std::exp(-std::numbers::e)) < 1e-15);
  CHECK(std::abs(s.times[4] - std::exp(-std::numbers::e) / 16) < 1e-15);
  CHECK(s.exponent == ex.beta);
  CHECK_FALSE(s.grid_too_coarse);
  CHECK(s.scaled_sup.rows() == 200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      CHECK(s.scaled_sup(i, k) > 0.0);
      if (k > 0) CHECK(s.running_min(i, k) <= s.running_min(i, k - 1));
    }
  }
  CHECK(s.final_min_p05 > 0.0);
  CHECK(s.final_min_p05 <= s.final_min_p95);

  const auto re = rescore(s, ex.beta + 0.5);
  CHECK(re.exponent == ex.beta + 0.5);
  CHECK(re.scaled_sup == s.scaled_sup);
  const double ll = std::log(std::abs(std::log(s.times[2])));
  CHECK(std::abs(re.statistic(3, 2) - s.scaled_sup(3, 2) * std::pow(ll, ex.beta + 0.5)) <
        1e-12 * re.statistic(3, 2));

  // Deterministic in the seed.
  const auto again = chung_statistic(p, 4, 200, 9, Endpoint::Zero, opts);
  CHECK(again.scaled_sup == s.scaled_sup);

  const auto inf = chung_statistic(p, 4, 50, 9, Endpoint::Infinity, opts);
  CHECK(std::abs(inf.times[4] - 16 * std::exp(std::numbers::e)) < 1e-12);

  ChungOptions coarse;
  coarse.points_per_octave = 16;
  coarse.extra_octaves = 2;
  CHECK(chung_statistic(p, 4, 20, 9, Endpoint::Zero, coarse).grid_too_coarse);
  CHECK_THROWS_AS(chung_statistic(p, 3, 20, 9, Endpoint::Zero, opts), DomainError);
}

TEST_CASE("maximal inequality probe") {
  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  ProbeOptions opts;
  opts.grid_n = 256;
  const auto same = maximal_inequality_probe(p, 0.5, 0.5, 1.0, 0.6, 2000, 4, opts);
  CHECK(same.joint_hits == std::min(same.hits_t, same.hits_u));
  const auto r = maximal_inequality_probe(p, 0.25, 1.0, 1.0, 1.0, 2000, 4, opts);
  CHECK(r.joint_hits <= std::min(r.hits_t, r.hits_u));
  CHECK(r.joint == static_cast<double>(r.joint_hits) / 2000);
  CHECK(r.joint_ci.low <= r.joint);
  CHECK(r.joint <= r.joint_ci.high);
  CHECK(std::abs(r.product_ratio - r.joint / (r.phi_nu * r.phi_eta)) < 1e-12 * r.product_ratio);
  CHECK(maximal_inequality_probe(p, 0.25, 1.0, 1e3, 1e3, 200, 4, opts).degenerate);
  CHECK_THROWS_AS(maximal_inequality_probe(p, 0.25, 1.0, 1e-4, 1e-4, 200, 4, opts), ZeroHits);
  CHECK_THROWS_AS(maximal_inequality_probe(p, 0.5, 0.25, 1.0, 1.0, 200, 4, opts), DomainError);
}
