#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfbm/covariance.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/params.hpp"
#include "gfbm/sampler.hpp"
#include "gfbm/smallball.hpp"

namespace gfbm::cli {

/// Malformed or inconsistent run configuration (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Tolerances {
  double cov = 1e-9;
  double exponent = 0.25;      // relative, on the fitted slope
  double series = 0.15;        // relative, Brownian phi against the series
  double chung_stable = 0.15;
  double chung_drop = 0.30;
};

struct IntegralTestConfig {
  std::vector<Endpoint> endpoints{Endpoint::Zero, Endpoint::Infinity};
  bool tabulated = false;
  std::vector<double> kappa{1.0};
  std::vector<double> beta;            // empty: beta of params
  std::vector<double> lambda_factors{0.5, 2.0};
  std::vector<double> lambda;          // absolute levels, tabulated model
  int horizon = 80;
};

struct ChungConfig {
  Endpoint endpoint = Endpoint::Zero;
  int points_per_octave = 128;
  int extra_octaves = 6;
  double misspecification = 0.5;
};

struct ProbeConfig {
  double t = 0.25, u = 1.0, nu = 1.0, eta = 1.0;
};

struct RunConfig {
  std::string command;
  std::optional<ProcessParams> params;
  Process process = Process::Y;
  std::size_t grid_n = 1024;
  double t_max = 1.0;
  std::vector<double> grid;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::vector<double> eps_list;
  int k_max = 6;
  Tolerances tolerances;
  std::string output_dir = "gfbm-out";
  SupMode sup_mode = SupMode::GridMax;
  GeneratorTag generator = GeneratorTag::Cholesky;
  int noise_mesh = 4096;
  double domain_cut = 8.0;
  std::string format = "csv";
  std::string input;
  IntegralTestConfig integral_test;
  ChungConfig chung;
  ProbeConfig probe;
  bool plots = true;
  std::string raw;  // config file bytes
};

/// Parses and validates; throws ConfigError (or ParamError) on any problem,
/// including unknown keys and a command that differs from `command`.
RunConfig parse_config(const std::string& text, const std::string& command);

/// Grid the command runs on: explicit grid, else k t_max / grid_n.
std::vector<double> run_grid(const RunConfig& cfg);

const ProcessParams& require_params(const RunConfig& cfg);

}  // namespace gfbm::cli
