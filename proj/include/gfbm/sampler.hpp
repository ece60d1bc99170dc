#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfbm/covariance.hpp"
#include "gfbm/params.hpp"

namespace gfbm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class GeneratorTag { Cholesky, Discretized };

const char* generator_name(GeneratorTag tag);

/// n_paths x m sample paths on grid (times > 0; X(0) = Y(0) = 0 implicitly).
struct PathBatch {
  std::vector<double> grid;
  RowMatrix values;
  std::uint64_t seed = 0;
  GeneratorTag generator = GeneratorTag::Cholesky;
  Process process = Process::X;
  ProcessParams params;
};

/// L L^T = cov + jitter I.
struct FactorizedCov {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
  std::vector<double> grid;
  Process process = Process::X;
  ProcessParams params;
};

/// Cholesky with jitter 0, then 1e-12, 1e-10, ..., 1e-4 times trace/m.
/// Throws NotFactorizable past 1e-4 trace/m and DomainError if cov is not symmetric.
FactorizedCov factorize(const CovMatrix& cov);

/// Rows are Z L^T with Z from NormalStream(seed, path index). Paths are
/// produced in fixed chunks, so values do not depend on `workers`.
PathBatch sample_gaussian(const FactorizedCov& factor, std::size_t n_paths, std::uint64_t seed,
                          int workers = 1);

/// Chunk visitor for batches too large to hold: fn(first_path, rows) is
/// called once per chunk, possibly from several threads at once.
using ChunkVisitor = std::function<void(std::size_t first_path, const RowMatrix& rows)>;
void stream_gaussian(const FactorizedCov& factor, std::size_t n_paths, std::uint64_t seed,
                     int workers, const ChunkVisitor& fn);

/// Midpoint discretization of the white-noise integral for X on a fixed mesh.
/// coef(i, k) = G(t_i, x_k) sqrt(dx_k) for mesh midpoints x_k; the last
/// column is a single lumped noise for the part of the negative half-line
/// beyond -domain_cut, matching the tail covariance to second order in
/// t / cut (leading term alpha^2 s t cut^{2 alpha - 1 - gamma} / (1 + gamma - 2 alpha)).
struct XDiscretization {
  std::vector<double> edges;  // mesh breakpoints, increasing, from -domain_cut to max(grid)
  Eigen::MatrixXd coef;       // m x (cells + 1)
  Eigen::VectorXd variance;   // row sums of coef^2: exact variance of the discretized X
};

/// noise_mesh cells are split between the two half-lines and power graded
/// toward x = 0 (exponent 2/(1 + a) for the local power a of G^2); every grid
/// time is a breakpoint, and for alpha < 0 the cells ending at grid times are
/// refined geometrically. The negative half-line is skipped when alpha = 0,
/// where G vanishes there.
XDiscretization discretize_x(const ProcessParams& params, const std::vector<double>& grid,
                             int noise_mesh, double domain_cut);

PathBatch sample_x_discretized(const ProcessParams& params, const std::vector<double>& grid,
                               int noise_mesh, double domain_cut, std::size_t n_paths,
                               std::uint64_t seed, int workers = 1);

/// Product-integration weights: Y(t_i) = sum_k w(i, k) X(t_k) + start(i) X(0),
/// exact for X piecewise linear between consecutive grid times (and 0).
struct FracWeights {
  Eigen::MatrixXd w;
  Eigen::VectorXd start;
};
FracWeights frac_integral_weights(const std::vector<double>& grid, double theta);

/// Riemann-Liouville integral of order theta of every path. start_value is
/// the path value at t = 0 (0 for sampled X; synthetic inputs may differ).
PathBatch frac_integral(const PathBatch& batch, double theta, double start_value = 0.0);

struct SupStatistic {
  std::vector<double> values;
  std::size_t points = 0;         // grid times in (0, t]
  bool grid_too_coarse = false;   // fewer than 32 points
};

/// Per-path max |value| over grid times <= t.
SupStatistic sup_statistic(const PathBatch& batch, double t);
SupStatistic sup_statistic(const std::vector<double>& grid, const RowMatrix& values, double t);

/// Probability that a Brownian bridge from a to b over time h stays in (-eps, eps).
double bridge_band_survival(double a, double b, double h, double eps);

/// For each row of values on grid (standard Brownian motion, X(0) = 0):
/// P(sup_[0,t] |W| < eps | grid values), the product of bridge survivals over
/// cells, zero if a grid value leaves the band.
std::vector<double> brownian_band_survival(const std::vector<double>& grid, const RowMatrix& values,
                                           double t, double eps);

/// CSV: header "path,t_1,...,t_m", one row per path, 17 significant digits.
void write_batch_csv(const PathBatch& batch, std::ostream& out);

/// Binary, little-endian: "GFBM", u32 version, u64 m, u64 n, u64 seed,
/// u32 generator, u32 process, f64 gamma, alpha, theta, m grid times,
/// then n*m values row by row.
void write_batch_binary(const PathBatch& batch, std::ostream& out);
PathBatch read_batch_binary(std::istream& in);

}  // namespace gfbm
