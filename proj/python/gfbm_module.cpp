#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gfbm/covariance.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/params.hpp"
#include "gfbm/sampler.hpp"
#include "gfbm/smallball.hpp"
#include "gfbm/special.hpp"
#include "gfbm/stats.hpp"

namespace py = pybind11;
using namespace gfbm;

namespace {

Process parse_process(const std::string& s) {
  if (s == "X") return Process::X;
  if (s == "Y") return Process::Y;
  throw DomainError("process must be 'X' or 'Y'");
}

Endpoint parse_endpoint(const std::string& s) {
  if (s == "zero") return Endpoint::Zero;
  if (s == "infinity") return Endpoint::Infinity;
  throw DomainError("endpoint must be 'zero' or 'infinity'");
}

PathBatch as_batch(const std::vector<double>& grid, const RowMatrix& values) {
  if (values.cols() != static_cast<Eigen::Index>(grid.size())) throw DomainError("values must have one column per grid time");
  return PathBatch{grid, values, 0, GeneratorTag::Cholesky, Process::X, ProcessParams::validate(0.0, 0.0, 1.0)};
}

py::dict result_dict(const IntegralTestResult& r) {
  py::dict d;
  d["verdict"] = verdict_name(r.verdict);
  d["partial_values"] = r.partial_values;
  d["increments"] = r.increments;
  d["domain_u"] = r.domain_u;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gfbm, m) {
  m.doc() = "Generalized fractional Brownian motion laboratory";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParamError>(m, "ParamError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<NoConvergence>(m, "NoConvergence", numerical.ptr());
  py::register_exception<NotFactorizable>(m, "NotFactorizable", numerical.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", error.ptr());
  py::register_exception<ZeroHits>(m, "ZeroHits", error.ptr());
  py::register_exception<UnboundedRatio>(m, "UnboundedRatio", error.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<DerivedExponents>(m, "DerivedExponents")
      .def_readonly("hurst", &DerivedExponents::hurst)
      .def_readonly("beta", &DerivedExponents::beta)
      .def_readonly("y_index", &DerivedExponents::y_index);

  py::class_<ProcessParams>(m, "Params")
      .def(py::init(&ProcessParams::validate), py::arg("gamma"), py::arg("alpha"), py::arg("theta"))
      .def_property_readonly("gamma", &ProcessParams::gamma)
      .def_property_readonly("alpha", &ProcessParams::alpha)
      .def_property_readonly("theta", &ProcessParams::theta)
      .def("derive", &derive)
      .def("__eq__", [](const ProcessParams& a, const ProcessParams& b) { return a == b; })
      .def("__repr__", [](const ProcessParams& p) {
        return "Params(gamma=" + std::to_string(p.gamma()) + ", alpha=" + std::to_string(p.alpha()) +
               ", theta=" + std::to_string(p.theta()) + ")";
      });

  m.def("gamma_fn", &gamma_fn);
  m.def("beta_fn", &beta_fn);
  m.def("kernel_g", &kernel_g, py::arg("params"), py::arg("s"), py::arg("x"));
  m.def("cov_x", &cov_x, py::arg("params"), py::arg("u"), py::arg("v"), py::arg("tol") = 1e-9);
  m.def("cov_y", &cov_y, py::arg("params"), py::arg("s"), py::arg("t"), py::arg("tol") = 1e-9);
  m.def(
      "cov_matrix",
      [](const ProcessParams& p, const std::vector<double>& grid, const std::string& process, double tol, int workers) {
        py::gil_scoped_release release;
        return cov_matrix(p, grid, parse_process(process), tol, workers).entries;
      },
      py::arg("params"), py::arg("grid"), py::arg("process") = "Y", py::arg("tol") = 1e-9, py::arg("workers") = 1);
  m.def("lamperti_autocov", &lamperti_autocov, py::arg("params"), py::arg("t"), py::arg("tol") = 1e-9);
  m.def("lamperti_rate_bound", &lamperti_rate_bound, py::arg("params"));

  m.def(
      "sample",
      [](const ProcessParams& p, const std::vector<double>& grid, std::size_t n_paths, std::uint64_t seed,
         const std::string& process, const std::string& generator, int workers, int noise_mesh, double domain_cut,
         double tol) {
        py::gil_scoped_release release;
        const Process which = parse_process(process);
        if (generator == "cholesky") {
          return sample_gaussian(factorize(cov_matrix(p, grid, which, tol, workers)), n_paths, seed, workers).values;
        }
        if (generator != "discretized") throw DomainError("generator must be 'cholesky' or 'discretized'");
        auto x = sample_x_discretized(p, grid, noise_mesh, domain_cut, n_paths, seed, workers);
        return which == Process::Y ? frac_integral(x, p.theta()).values : x.values;
      },
      py::arg("params"), py::arg("grid"), py::arg("n_paths"), py::arg("seed"), py::arg("process") = "Y",
      py::arg("generator") = "cholesky", py::arg("workers") = 1, py::arg("noise_mesh") = 4096,
      py::arg("domain_cut") = 8.0, py::arg("tol") = 1e-9,
      "n_paths x len(grid) array of sample paths; identical for any worker count.");
  m.def(
      "frac_integral",
      [](const std::vector<double>& grid, const RowMatrix& values, double theta, double start_value) {
        return frac_integral(as_batch(grid, values), theta, start_value).values;
      },
      py::arg("grid"), py::arg("values"), py::arg("theta"), py::arg("start_value") = 0.0);
  m.def(
      "sup_statistic",
      [](const std::vector<double>& grid, const RowMatrix& values, double t) {
        return sup_statistic(grid, values, t).values;
      },
      py::arg("grid"), py::arg("values"), py::arg("t"));

  py::class_<SmallBallEstimate>(m, "SmallBallEstimate")
      .def(py::init([](double eps, std::size_t hits, std::size_t n) { return make_estimate(eps, hits, n); }),
           py::arg("epsilon"), py::arg("hits"), py::arg("n"))
      .def_readonly("epsilon", &SmallBallEstimate::epsilon)
      .def_readonly("n", &SmallBallEstimate::n)
      .def_readonly("hits", &SmallBallEstimate::hits)
      .def_readonly("phat", &SmallBallEstimate::phat)
      .def_readonly("ci_low", &SmallBallEstimate::ci_low)
      .def_readonly("ci_high", &SmallBallEstimate::ci_high)
      .def_readonly("psi_defined", &SmallBallEstimate::psi_defined)
      .def_readonly("psi", &SmallBallEstimate::psi)
      .def_readonly("psi_low", &SmallBallEstimate::psi_low)
      .def_readonly("psi_high", &SmallBallEstimate::psi_high);

  m.def(
      "estimate_phi",
      [](const ProcessParams& p, const std::vector<double>& eps, std::size_t n_paths, std::size_t grid_n,
         std::uint64_t seed, const std::string& process, const std::string& sup_mode, int workers) {
        PhiOptions o;
        o.process = parse_process(process);
        if (sup_mode == "bridge") o.sup_mode = SupMode::BrownianBridge;
        else if (sup_mode != "grid") throw DomainError("sup_mode must be 'grid' or 'bridge'");
        o.workers = workers;
        py::gil_scoped_release release;
        return estimate_phi(p, eps, n_paths, grid_n, seed, o);
      },
      py::arg("params"), py::arg("eps_list"), py::arg("n_paths"), py::arg("grid_n"), py::arg("seed"),
      py::arg("process") = "Y", py::arg("sup_mode") = "grid", py::arg("workers") = 1);

  py::class_<ExponentFit>(m, "ExponentFit")
      .def_readonly("slope", &ExponentFit::slope)
      .def_readonly("intercept", &ExponentFit::intercept)
      .def_readonly("stderr", &ExponentFit::slope_stderr)
      .def_readonly("r2", &ExponentFit::r2)
      .def_readonly("points", &ExponentFit::points);
  m.def("fit_exponent", &fit_exponent, py::arg("estimates"));

  py::class_<PsiAudit>(m, "PsiAudit")
      .def_readonly("monotone", &PsiAudit::monotone)
      .def_readonly("growth", &PsiAudit::growth)
      .def_readonly("sandwich", &PsiAudit::sandwich)
      .def_readonly("convex", &PsiAudit::convex)
      .def_readonly("k1_min", &PsiAudit::k1_min)
      .def_readonly("k1_point", &PsiAudit::k1_point)
      .def_property_readonly("violations", [](const PsiAudit& a) {
        py::list out;
        for (const auto& v : a.violations) out.append(py::make_tuple(v.check, v.eps_a, v.eps_b, v.margin));
        return out;
      });
  m.def("audit_psi_properties", &audit_psi_properties, py::arg("estimates"), py::arg("beta"));

  m.def(
      "integral_test_chung",
      [](double lam, double kappa, double beta, const std::string& endpoint, double y_index, int horizon) {
        DerivedExponents ex{0.0, beta, y_index};
        IntegralTestOptions o;
        o.horizon = horizon;
        return result_dict(eval_integral_test(
            IntegralTestSpec{chung_boundary(lam, ex), parse_endpoint(endpoint), PhiModel::analytic(kappa, beta)}, ex, o));
      },
      py::arg("lam"), py::arg("kappa"), py::arg("beta"), py::arg("endpoint") = "zero", py::arg("y_index") = 1.0,
      py::arg("horizon") = 80,
      "Integral test for xi(t) = lam t^{H+theta} / (ln|ln t|)^beta against phi = exp(-kappa eps^{-1/beta}).");
  m.def(
      "integral_test",
      [](const std::function<double(double)>& log_ratio, double kappa, double beta, const std::string& endpoint,
         double y_index, int horizon) {
        DerivedExponents ex{0.0, beta, y_index};
        IntegralTestOptions o;
        o.horizon = horizon;
        return result_dict(eval_integral_test(
            IntegralTestSpec{log_ratio, parse_endpoint(endpoint), PhiModel::analytic(kappa, beta)}, ex, o));
      },
      py::arg("log_ratio"), py::arg("kappa"), py::arg("beta"), py::arg("endpoint") = "zero", py::arg("y_index") = 1.0,
      py::arg("horizon") = 80, "log_ratio(log t) = log(xi(t) / t^{H+theta}).");

  py::class_<ChungSeries>(m, "ChungSeries")
      .def_readonly("times", &ChungSeries::times)
      .def_readonly("exponent", &ChungSeries::exponent)
      .def_readonly("scaled_sup", &ChungSeries::scaled_sup)
      .def_readonly("statistic", &ChungSeries::statistic)
      .def_readonly("running_min", &ChungSeries::running_min)
      .def_readonly("median_scaled_sup", &ChungSeries::median_scaled_sup)
      .def_readonly("median_running_min", &ChungSeries::median_running_min)
      .def_readonly("final_min_p05", &ChungSeries::final_min_p05)
      .def_readonly("final_min_p95", &ChungSeries::final_min_p95)
      .def_readonly("grid_points", &ChungSeries::grid_points)
      .def_readonly("grid_too_coarse", &ChungSeries::grid_too_coarse);
  m.def(
      "chung_statistic",
      [](const ProcessParams& p, int k_max, std::size_t n_paths, std::uint64_t seed, const std::string& endpoint,
         int points_per_octave, int extra_octaves, int workers) {
        ChungOptions o;
        o.points_per_octave = points_per_octave;
        o.extra_octaves = extra_octaves;
        o.workers = workers;
        const Endpoint e = parse_endpoint(endpoint);
        py::gil_scoped_release release;
        return chung_statistic(p, k_max, n_paths, seed, e, o);
      },
      py::arg("params"), py::arg("k_max"), py::arg("n_paths"), py::arg("seed"), py::arg("endpoint") = "zero",
      py::arg("points_per_octave") = 128, py::arg("extra_octaves") = 6, py::arg("workers") = 1);
  m.def("rescore", &rescore, py::arg("series"), py::arg("exponent"));

  py::class_<ProbeReport>(m, "ProbeReport")
      .def_readonly("joint_hits", &ProbeReport::joint_hits)
      .def_readonly("hits_t", &ProbeReport::hits_t)
      .def_readonly("hits_u", &ProbeReport::hits_u)
      .def_readonly("joint", &ProbeReport::joint)
      .def_readonly("hits_eta", &ProbeReport::hits_eta)
      .def_readonly("phi_nu", &ProbeReport::phi_nu)
      .def_readonly("phi_eta", &ProbeReport::phi_eta)
      .def_readonly("decay_ratio", &ProbeReport::decay_ratio)
      .def_readonly("product_ratio", &ProbeReport::product_ratio)
      .def_readonly("degenerate", &ProbeReport::degenerate);
  m.def(
      "maximal_inequality_probe",
      [](const ProcessParams& p, double t, double u, double nu, double eta, std::size_t n_paths, std::uint64_t seed,
         std::size_t grid_n, int workers) {
        ProbeOptions o;
        o.grid_n = grid_n;
        o.workers = workers;
        py::gil_scoped_release release;
        return maximal_inequality_probe(p, t, u, nu, eta, n_paths, seed, o);
      },
      py::arg("params"), py::arg("t"), py::arg("u"), py::arg("nu"), py::arg("eta"), py::arg("n_paths"),
      py::arg("seed"), py::arg("grid_n") = 1024, py::arg("workers") = 1);

  m.def(
      "wilson_interval",
      [](std::size_t hits, std::size_t n) {
        const auto i = wilson_interval(hits, n);
        return py::make_tuple(i.low, i.high);
      },
      py::arg("hits"), py::arg("n"));
  m.def(
      "ks_two_sample",
      [](std::vector<double> a, std::vector<double> b) {
        const auto r = ks_two_sample(std::move(a), std::move(b));
        return py::make_tuple(r.statistic, r.critical_1pct, r.reject_1pct);
      },
      py::arg("a"), py::arg("b"));
}
