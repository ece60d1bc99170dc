#include "commands.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gfbm/covariance.hpp"
#include "gfbm/csv.hpp"
#include "gfbm/sampler.hpp"
#include "gfbm/smallball.hpp"
#include "gfbm/stats.hpp"
#include "svg.hpp"

namespace gfbm::cli {

using nlohmann::json;

namespace {

double brownian_series(double eps) {
  double s = 0.0;
  for (int k = 0; k < 60; ++k) {
    const double odd = 2.0 * k + 1.0;
    s += (k % 2 ? -1.0 : 1.0) / odd * std::exp(-odd * odd * std::numbers::pi * std::numbers::pi / (8.0 * eps * eps));
  }
  return 4.0 / std::numbers::pi * s;
}

/// Small-ball exponent of the chosen process: alpha + 1/2 for X, beta for Y.
double process_beta(const ProcessParams& p, Process which) {
  return which == Process::X ? p.alpha() + 0.5 : derive(p).beta;
}

const char* endpoint_name(Endpoint e) { return e == Endpoint::Zero ? "zero" : "infinity"; }

json fit_json(const ExponentFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.slope_stderr}, {"r2", f.r2},
          {"eps_min", f.eps_min}, {"eps_max", f.eps_max}, {"points", f.points}};
}

json audit_json(const PsiAudit& a) {
  json v = json::array();
  for (const auto& x : a.violations) {
    v.push_back({{"check", x.check}, {"eps_a", x.eps_a}, {"eps_b", x.eps_b}, {"margin", x.margin}});
  }
  return {{"monotone", a.monotone}, {"growth", a.growth},     {"sandwich", a.sandwich},
          {"convex", a.convex},     {"k1_min", a.k1_min},     {"k1_point", a.k1_point},
          {"violations", v},        {"pass", a.monotone && a.growth && a.sandwich && a.convex}};
}

std::string psi_plot(const std::vector<SmallBallEstimate>& est, const ExponentFit* fit, double slope_expected) {
  Series data{"log psi", {}, {}};
  for (const auto& e : est) {
    if (!e.psi_defined || !(e.psi > 0.0)) continue;
    data.x.push_back(std::log(1.0 / e.epsilon));
    data.y.push_back(std::log(e.psi));
  }
  std::vector<Series> series{data};
  if (fit && !data.x.empty()) {
    Series line{"fit, slope " + format_double(std::round(fit->slope * 1e4) / 1e4), {}, {}, false, false};
    Series ref{"slope 1/beta", {}, {}, true, false};
    for (double x : {data.x.front(), data.x.back()}) {
      line.x.push_back(x);
      line.y.push_back(fit->intercept + fit->slope * x);
      ref.x.push_back(x);
      ref.y.push_back(fit->intercept + fit->slope * data.x.front() + slope_expected * (x - data.x.front()));
    }
    series.push_back(line);
    series.push_back(ref);
  }
  return line_plot("small-ball log-level", "log(1/eps)", "log psi", series);
}

json run_simulate(const RunConfig& cfg, int workers, StagedDir& dir) {
  const auto& p = require_params(cfg);
  const auto grid = run_grid(cfg);
  json info;
  const PathBatch batch = [&] {
    if (cfg.generator == GeneratorTag::Cholesky) {
      const auto factor = factorize(cov_matrix(p, grid, cfg.process, cfg.tolerances.cov, workers));
      info["jitter"] = factor.jitter;
      return sample_gaussian(factor, cfg.n_paths, cfg.seed, workers);
    }
    info["noise_mesh"] = cfg.noise_mesh;
    info["domain_cut"] = cfg.domain_cut;
    auto x = sample_x_discretized(p, grid, cfg.noise_mesh, cfg.domain_cut, cfg.n_paths, cfg.seed, workers);
    return cfg.process == Process::Y ? frac_integral(x, p.theta()) : x;
  }();
  std::ostringstream out;
  if (cfg.format == "csv") {
    write_batch_csv(batch, out);
    dir.write("paths.csv", out.str());
  } else {
    write_batch_binary(batch, out);
    dir.write("paths.bin", out.str());
  }
  info["process"] = process_name(cfg.process);
  info["generator"] = generator_name(cfg.generator);
  info["n_paths"] = cfg.n_paths;
  info["grid_points"] = grid.size();
  info["format"] = cfg.format;
  return info;
}

json run_cov(const RunConfig& cfg, int workers, StagedDir& dir) {
  const auto& p = require_params(cfg);
  const auto cov = cov_matrix(p, run_grid(cfg), cfg.process, cfg.tolerances.cov, workers);
  std::ostringstream out;
  write_cov_csv(cov, out);
  dir.write("cov.csv", out.str());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.entries, Eigen::EigenvaluesOnly);

  std::string lcsv = "t,autocov\r\n";
  std::vector<double> ts, logs, values;
  bool decreasing = true;
  for (int t = 0; t <= 5; ++t) {
    const double v = lamperti_autocov(p, t, cfg.tolerances.cov);
    if (!values.empty() && !(v < values.back())) decreasing = false;
    values.push_back(v);
    lcsv += std::to_string(t) + ',' + format_double(v) + "\r\n";
  }
  dir.write("lamperti.csv", lcsv);
  for (int t = 1; t <= 5; ++t) {
    ts.push_back(t);
    logs.push_back(std::log(values[t]));
  }
  const auto fit = weighted_linear_fit(ts, logs, std::vector<double>(ts.size(), 1.0));
  const double bound = lamperti_rate_bound(p);
  const bool in_band = fit.slope < 0.0 && -fit.slope >= 0.5 * bound;
  if (cfg.plots) {
    std::vector<double> all_t{0, 1, 2, 3, 4, 5}, all_log;
    for (double v : values) all_log.push_back(std::log(v));
    dir.write("lamperti.svg", line_plot("Lamperti autocovariance", "t", "log autocov", {{"log autocov", all_t, all_log}}));
  }
  return {{"process", process_name(cfg.process)},
          {"grid_points", cov.grid.size()},
          {"max_quad_error", cov.max_quad_error},
          {"min_eigenvalue", eig.eigenvalues().minCoeff()},
          {"max_eigenvalue", eig.eigenvalues().maxCoeff()},
          {"lamperti",
           {{"values", values},
            {"strictly_decreasing", decreasing},
            {"slope", fit.slope},
            {"rate_bound", bound},
            {"pass", decreasing && in_band}}}};
}

json run_smallball(const RunConfig& cfg, int workers, StagedDir& dir) {
  const auto& p = require_params(cfg);
  PhiOptions opts;
  opts.process = cfg.process;
  opts.sup_mode = cfg.sup_mode;
  opts.workers = workers;
  opts.cov_tol = cfg.tolerances.cov;
  const auto est = estimate_phi(p, cfg.eps_list, cfg.n_paths, cfg.grid_n, cfg.seed, opts);
  dir.write("smallball.csv", smallball_csv(est));

  const double beta = process_beta(p, cfg.process);
  json info{{"process", process_name(cfg.process)},
            {"sup_mode", cfg.sup_mode == SupMode::GridMax ? "grid" : "bridge"},
            {"grid_n", cfg.grid_n},
            {"n_paths", cfg.n_paths},
            {"beta_expected", beta},
            {"fit", nullptr},
            {"audit", nullptr}};
  std::optional<ExponentFit> fit;
  try {
    fit = fit_exponent(est);
    info["fit"] = fit_json(*fit);
  } catch (const InsufficientData&) {
  }
  try {
    info["audit"] = audit_json(audit_psi_properties(est, beta));
  } catch (const InsufficientData&) {
  }
  if (cfg.process == Process::X && p.gamma() == 0.0 && p.alpha() == 0.0) {
    json rows = json::array();
    bool all = true;
    for (const auto& e : est) {
      const double truth = brownian_series(e.epsilon);
      const double rel = std::abs(e.phat - truth) / truth;
      all = all && rel <= cfg.tolerances.series;
      rows.push_back({{"epsilon", e.epsilon}, {"series", truth}, {"phat", e.phat}, {"rel_error", rel}});
    }
    info["brownian_series"] = {{"rows", rows}, {"tolerance", cfg.tolerances.series}, {"pass", all}};
  }
  if (cfg.plots) dir.write("psi.svg", psi_plot(est, fit ? &*fit : nullptr, 1.0 / beta));
  return info;
}

json run_exponent(const RunConfig& cfg, StagedDir& dir) {
  const auto& p = require_params(cfg);
  const auto est = read_smallball_csv(read_file(cfg.input));
  const auto fit = fit_exponent(est);
  const double beta = process_beta(p, cfg.process);
  const double expected = 1.0 / beta;
  if (cfg.plots) dir.write("psi.svg", psi_plot(est, &fit, expected));
  return {{"slope", fit.slope},
          {"stderr", fit.slope_stderr},
          {"r2", fit.r2},
          {"beta_expected", beta},
          {"slope_expected", expected},
          {"tolerance", cfg.tolerances.exponent},
          {"within_tolerance", std::abs(fit.slope - expected) <= cfg.tolerances.exponent * expected},
          {"points", fit.points},
          {"process", process_name(cfg.process)},
          {"input", cfg.input}};
}

json run_audit(const RunConfig& cfg) {
  const auto& p = require_params(cfg);
  const auto est = read_smallball_csv(read_file(cfg.input));
  json info = audit_json(audit_psi_properties(est, process_beta(p, cfg.process)));
  info["beta"] = process_beta(p, cfg.process);
  info["input"] = cfg.input;
  return info;
}

json run_integral_test(const RunConfig& cfg, StagedDir& dir) {
  const auto& p = require_params(cfg);
  const auto& it = cfg.integral_test;
  const DerivedExponents base = derive(p);
  IntegralTestOptions opts;
  opts.horizon = it.horizon;

  std::string csv = "endpoint,kappa,beta,lambda,verdict,expected,steps,partial\r\n";
  json cases = json::array();
  std::size_t correct = 0, decided = 0;
  auto one = [&](Endpoint end, double kappa, double beta, double lambda, const PhiModel& model,
                 const std::string& expected) {
    DerivedExponents ex = base;
    ex.beta = beta;
    const auto r = eval_integral_test(IntegralTestSpec{chung_boundary(lambda, ex), end, model}, ex, opts);
    const std::string verdict = verdict_name(r.verdict);
    if (expected == "converges" || expected == "diverges") {
      ++decided;
      if (verdict == expected) ++correct;
    }
    csv += std::string(endpoint_name(end)) + ',' + (kappa > 0 ? format_double(kappa) : "") + ',' + format_double(beta) +
           ',' + format_double(lambda) + ',' + verdict + ',' + expected + ',' +
           std::to_string(r.partial_values.size()) + ',' + format_double(r.partial_values.back()) + "\r\n";
    cases.push_back({{"endpoint", endpoint_name(end)},
                     {"kappa", kappa > 0 ? json(kappa) : json(nullptr)},
                     {"beta", beta},
                     {"lambda", lambda},
                     {"verdict", verdict},
                     {"expected", expected},
                     {"partial_values", r.partial_values}});
  };

  if (it.tabulated) {
    const auto model = PhiModel::tabulated(read_smallball_csv(read_file(cfg.input)));
    for (Endpoint end : it.endpoints) {
      for (double lambda : it.lambda) one(end, 0.0, base.beta, lambda, model, "unknown");
    }
  } else {
    const std::vector<double> betas = it.beta.empty() ? std::vector<double>{base.beta} : it.beta;
    for (Endpoint end : it.endpoints) {
      for (double kappa : it.kappa) {
        for (double beta : betas) {
          // With phi = exp(-kappa eps^{-1/beta}) the integrand is (ln 1/t)^{-kappa lambda^{-1/beta}}
          // per dt/t, so lambda = kappa^beta separates the two classes.
          for (double f : it.lambda_factors) {
            const std::string expected = f < 1.0 ? "converges" : (f > 1.0 ? "diverges" : "boundary");
            one(end, kappa, beta, f * std::pow(kappa, beta), PhiModel::analytic(kappa, beta), expected);
          }
        }
      }
    }
  }
  dir.write("integral_test.csv", csv);
  return {{"phi", it.tabulated ? "tabulated" : "analytic"},
          {"cases", cases},
          {"decided", decided},
          {"correct", correct},
          {"all_correct", decided > 0 && correct == decided}};
}

json run_chung(const RunConfig& cfg, int workers, StagedDir& dir) {
  const auto& p = require_params(cfg);
  ChungOptions opts;
  opts.points_per_octave = cfg.chung.points_per_octave;
  opts.extra_octaves = cfg.chung.extra_octaves;
  opts.workers = workers;
  opts.cov_tol = cfg.tolerances.cov;
  const auto s = chung_statistic(p, cfg.k_max, cfg.n_paths, cfg.seed, cfg.chung.endpoint, opts);
  const auto alt = rescore(s, s.exponent + cfg.chung.misspecification);
  const auto k4 = static_cast<Eigen::Index>(4), kl = static_cast<Eigen::Index>(cfg.k_max);

  auto column = [](const RowMatrix& m, Eigen::Index k) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, k);
    return v;
  };
  auto summary = [&](const ChungSeries& c) {
    const double m4 = c.median_running_min[4], ml = c.median_running_min[static_cast<std::size_t>(kl)];
    const auto ci4 = median_interval(column(c.running_min, k4));
    const auto cil = median_interval(column(c.running_min, kl));
    return json{{"exponent", c.exponent},
                {"median_k4", m4},
                {"median_k4_ci", {ci4.low, ci4.high}},
                {"median_kmax", ml},
                {"median_kmax_ci", {cil.low, cil.high}},
                {"change", (ml - m4) / m4}};
  };
  const json truth = summary(s), wrong = summary(alt);
  const double change_true = truth["change"], change_alt = wrong["change"];

  std::string csv = "k,t,median_scaled_sup,median_running_min,median_running_min_misspecified\r\n";
  std::vector<double> ks, mt, ma;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    csv += std::to_string(k) + ',' + format_double(s.times[k]) + ',' + format_double(s.median_scaled_sup[k]) + ',' +
           format_double(s.median_running_min[k]) + ',' + format_double(alt.median_running_min[k]) + "\r\n";
    ks.push_back(static_cast<double>(k));
    mt.push_back(s.median_running_min[k]);
    ma.push_back(alt.median_running_min[k]);
  }
  dir.write("chung.csv", csv);
  if (cfg.plots) {
    dir.write("chung.svg", line_plot("Chung statistic, median running minimum", "k", "median running min",
                                     {{"exponent beta", ks, mt}, {"exponent beta + " + format_double(cfg.chung.misspecification), ks, ma, true}}));
  }
  const bool stable = std::abs(change_true) < cfg.tolerances.chung_stable;
  const bool detected = change_alt <= -cfg.tolerances.chung_drop;
  return {{"endpoint", endpoint_name(cfg.chung.endpoint)},
          {"k_max", cfg.k_max},
          {"n_paths", cfg.n_paths},
          {"true_exponent", truth},
          {"misspecified_exponent", wrong},
          {"final_min_p05", s.final_min_p05},
          {"final_min_p95", s.final_min_p95},
          {"grid_points", s.grid_points},
          {"grid_too_coarse", s.grid_too_coarse},
          {"stable", stable},
          {"misspecification_detected", detected},
          {"positive", s.final_min_p05 > 0.0},
          {"pass", stable && detected && s.final_min_p05 > 0.0}};
}

json run_probe(const RunConfig& cfg, int workers, StagedDir& dir) {
  const auto& p = require_params(cfg);
  ProbeOptions opts;
  opts.grid_n = cfg.grid_n;
  opts.workers = workers;
  opts.cov_tol = cfg.tolerances.cov;
  const auto& q = cfg.probe;
  const auto r = maximal_inequality_probe(p, q.t, q.u, q.nu, q.eta, cfg.n_paths, cfg.seed, opts);
  std::string csv = "t,u,nu,eta,n,joint_hits,joint,joint_ci_low,joint_ci_high,phi_nu,phi_eta,decay_ratio,product_ratio\r\n";
  csv += format_double(r.t) + ',' + format_double(r.u) + ',' + format_double(r.nu) + ',' + format_double(r.eta) + ',' +
         std::to_string(r.n) + ',' + std::to_string(r.joint_hits) + ',' + format_double(r.joint) + ',' +
         format_double(r.joint_ci.low) + ',' + format_double(r.joint_ci.high) + ',' + format_double(r.phi_nu) + ',' +
         format_double(r.phi_eta) + ',' + format_double(r.decay_ratio) + ',' + format_double(r.product_ratio) + "\r\n";
  dir.write("probe.csv", csv);
  return {{"t", r.t},
          {"u", r.u},
          {"nu", r.nu},
          {"eta", r.eta},
          {"n", r.n},
          {"joint_hits", r.joint_hits},
          {"hits_t", r.hits_t},
          {"hits_u", r.hits_u},
          {"hits_eta", r.hits_eta},
          {"joint", r.joint},
          {"joint_ci", {r.joint_ci.low, r.joint_ci.high}},
          {"phi_nu", r.phi_nu},
          {"phi_eta", r.phi_eta},
          {"decay_ratio", r.decay_ratio},
          {"product_ratio", r.product_ratio},
          {"degenerate", r.degenerate}};
}

}  // namespace

json run_command(const RunConfig& cfg, int workers, StagedDir& dir) {
  const std::string& c = cfg.command;
  if (c == "simulate") return run_simulate(cfg, workers, dir);
  if (c == "cov") return run_cov(cfg, workers, dir);
  if (c == "smallball") return run_smallball(cfg, workers, dir);
  if (c == "exponent") return run_exponent(cfg, dir);
  if (c == "audit") return run_audit(cfg);
  if (c == "integral-test") return run_integral_test(cfg, dir);
  if (c == "chung") return run_chung(cfg, workers, dir);
  if (c == "probe") return run_probe(cfg, workers, dir);
  throw ConfigError("unknown command '" + c + "'");
}

}  // namespace gfbm::cli
