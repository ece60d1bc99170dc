#include "gfbm/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "gfbm/csv.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/parallel.hpp"
#include "gfbm/quadrature.hpp"
#include "gfbm/rng.hpp"
#include "gfbm/special.hpp"

namespace gfbm {

namespace {

constexpr std::size_t kChunk = 256;
constexpr std::uint32_t kBinaryVersion = 1;

void fill_normals(RowMatrix& z, std::size_t first_path, std::uint64_t seed) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    NormalStream stream(seed, first_path + static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = stream.next();
  }
}

// Chunks of kChunk paths; chunk boundaries depend only on n_paths.
template <class Fn>
void for_each_chunk(std::size_t n_paths, int workers, Fn&& fn) {
  const std::size_t chunks = (n_paths + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    fn(first, std::min(kChunk, n_paths - first));
  });
}

double grading_exponent(double local_power) {
  return std::clamp(2.0 / (1.0 + local_power), 1.0, 8.0);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_bytes(std::istream& in, int count) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), count)) throw IoError("path batch: truncated binary file");
  std::uint64_t v = 0;
  for (int i = count - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

}  // namespace

const char* generator_name(GeneratorTag tag) {
  return tag == GeneratorTag::Cholesky ? "cholesky" : "discretized";
}

FactorizedCov factorize(const CovMatrix& cov) {
  const Eigen::MatrixXd& c = cov.entries;
  const Eigen::Index m = c.rows();
  if (m == 0 || c.cols() != m) throw DomainError("factorize: matrix must be square and nonempty");
  const double scale = c.cwiseAbs().maxCoeff();
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
    throw DomainError("factorize: matrix is not symmetric");
  }
  const double unit = c.trace() / static_cast<double>(m);
  double jitter = 0.0;
  for (int level = 0;; ++level) {
    if (level > 0) jitter = unit * std::pow(10.0, -14.0 + 2.0 * level);
    Eigen::LLT<Eigen::MatrixXd> llt(c + jitter * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.allFinite() && (lower.diagonal().array() > 0.0).all()) {
        return FactorizedCov{std::move(lower), jitter, cov.grid, cov.process, cov.params};
      }
    }
    if (level == 5) {
      throw NotFactorizable(unit * 1e-2,
                            "factorize: Cholesky fails even with jitter 1e-4 trace/m; the covariance is broken");
    }
  }
}

void stream_gaussian(const FactorizedCov& factor, std::size_t n_paths, std::uint64_t seed, int workers,
                     const ChunkVisitor& fn) {
  if (n_paths == 0) throw DomainError("sample_gaussian: n_paths must be >= 1");
  const auto m = factor.lower.rows();
  const Eigen::MatrixXd upper = factor.lower.transpose();
  for_each_chunk(n_paths, workers, [&](std::size_t first, std::size_t count) {
    RowMatrix z(static_cast<Eigen::Index>(count), m);
    fill_normals(z, first, seed);
    RowMatrix rows = z * upper.triangularView<Eigen::Upper>();
    fn(first, rows);
  });
}

PathBatch sample_gaussian(const FactorizedCov& factor, std::size_t n_paths, std::uint64_t seed, int workers) {
  RowMatrix values(static_cast<Eigen::Index>(n_paths), factor.lower.rows());
  stream_gaussian(factor, n_paths, seed, workers, [&](std::size_t first, const RowMatrix& rows) {
    values.middleRows(static_cast<Eigen::Index>(first), rows.rows()) = rows;
  });
  return PathBatch{factor.grid, std::move(values), seed, GeneratorTag::Cholesky, factor.process, factor.params};
}

XDiscretization discretize_x(const ProcessParams& params, const std::vector<double>& grid, int noise_mesh,
                             double domain_cut) {
  check_grid(grid);
  if (noise_mesh < 256) throw DomainError("discretize_x: noise_mesh must be >= 256");
  if (!(domain_cut > 0.0) || !std::isfinite(domain_cut)) throw DomainError("discretize_x: domain_cut must be > 0");
  const double gamma = params.gamma();
  const double alpha = params.alpha();
  const double t_max = grid.back();
  const bool negative = alpha != 0.0;
  const int n_pos = negative ? noise_mesh / 2 : noise_mesh;
  const int n_neg = noise_mesh - n_pos;

  std::vector<double> edges;
  if (negative) {
    const double p = grading_exponent(std::min(0.0, 2.0 * alpha) - gamma);
    for (int k = n_neg; k >= 1; --k) edges.push_back(-domain_cut * std::pow(static_cast<double>(k) / n_neg, p));
  }
  edges.push_back(0.0);
  {
    const double p = grading_exponent(-gamma);
    std::vector<double> pos(grid);
    for (int k = 1; k < n_pos; ++k) {
      const double x = t_max * std::pow(static_cast<double>(k) / n_pos, p);
      const auto it = std::lower_bound(grid.begin(), grid.end(), x);
      double nearest = it == grid.end() ? grid.back() : *it;
      if (it != grid.begin() && x - *(it - 1) < nearest - x) nearest = *(it - 1);
      if (std::abs(x - nearest) > 1e-10 * t_max) pos.push_back(x);
    }
    if (alpha < 0.0) {
      // Cells ending at a grid time carry the (t - x)^{2 alpha} singularity.
      std::sort(pos.begin(), pos.end());
      std::vector<double> extra;
      for (double t : grid) {
        const auto it = std::lower_bound(pos.begin(), pos.end(), t);
        const double a = it == pos.begin() ? 0.0 : *(it - 1);
        for (int level = 1; level <= 8; ++level) extra.push_back(t - (t - a) * std::ldexp(1.0, -level));
      }
      pos.insert(pos.end(), extra.begin(), extra.end());
    }
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    edges.insert(edges.end(), pos.begin(), pos.end());
  }

  const auto m = static_cast<Eigen::Index>(grid.size());
  const auto cells = static_cast<Eigen::Index>(edges.size() - 1);
  XDiscretization out;
  out.coef = Eigen::MatrixXd::Zero(m, cells + 1);
  std::vector<double> mid(cells), root(cells);
  for (Eigen::Index k = 0; k < cells; ++k) {
    mid[k] = 0.5 * (edges[k] + edges[k + 1]);
    root[k] = std::sqrt(edges[k + 1] - edges[k]);
  }
  // Beyond the cut f_s f_t y^{-gamma} = alpha^2 s t y^{2 alpha - 2 - gamma} (1 + (alpha - 1)(s + t)/(2y) + ...),
  // matched to second order by the rank-one coefficient alpha t sqrt(A) (1 + kappa t).
  const double tail_a = std::pow(domain_cut, 2.0 * alpha - 1.0 - gamma) / (1.0 + gamma - 2.0 * alpha);
  const double tail_b = std::pow(domain_cut, 2.0 * alpha - 2.0 - gamma) / (2.0 + gamma - 2.0 * alpha);
  const double kappa = (alpha - 1.0) * tail_b / (2.0 * tail_a);
  const double lump = negative ? alpha * std::sqrt(tail_a) : 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = grid[i];
    for (Eigen::Index k = 0; k < cells && mid[k] < t; ++k) out.coef(i, k) = kernel_g(params, t, mid[k]) * root[k];
    out.coef(i, cells) = lump * t * (1.0 + kappa * t);
  }
  out.variance = out.coef.rowwise().squaredNorm();
  out.edges = std::move(edges);
  return out;
}

PathBatch sample_x_discretized(const ProcessParams& params, const std::vector<double>& grid, int noise_mesh,
                               double domain_cut, std::size_t n_paths, std::uint64_t seed, int workers) {
  if (n_paths == 0) throw DomainError("sample_x_discretized: n_paths must be >= 1");
  const XDiscretization disc = discretize_x(params, grid, noise_mesh, domain_cut);
  const Eigen::MatrixXd coef_t = disc.coef.transpose();
  RowMatrix values(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(grid.size()));
  for_each_chunk(n_paths, workers, [&](std::size_t first, std::size_t count) {
    RowMatrix z(static_cast<Eigen::Index>(count), coef_t.rows());
    fill_normals(z, first, seed);
    values.middleRows(static_cast<Eigen::Index>(first), z.rows()).noalias() = z * coef_t;
  });
  return PathBatch{grid, std::move(values), seed, GeneratorTag::Discretized, Process::X, params};
}

FracWeights frac_integral_weights(const std::vector<double>& grid, double theta) {
  check_grid(grid);
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("frac_integral: theta must be > 0");
  const auto m = static_cast<Eigen::Index>(grid.size());
  const double inv_gamma = 1.0 / gamma_fn(theta);
  const GaussRule gl = gauss_jacobi(8, 0.0, 0.0);
  FracWeights out{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd::Zero(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ti = grid[i];
    for (Eigen::Index k = 0; k <= i; ++k) {
      const double a = k == 0 ? 0.0 : grid[k - 1];
      const double b = grid[k];
      const double h = b - a;
      const double c = ti - b;  // v = t_i - u runs over [c, d]
      const double d = ti - a;
      double left, right;  // weights of X(a) and X(b)
      if (c <= 4.0 * h) {
        const double i0 = (std::pow(d, theta) - std::pow(c, theta)) / theta;
        const double i1 = (std::pow(d, theta + 1.0) - std::pow(c, theta + 1.0)) / (theta + 1.0);
        left = (i1 - c * i0) / h;
        right = (d * i0 - i1) / h;
      } else {
        // Far from the singularity: Gauss-Legendre avoids the cancellation above.
        left = right = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          const double s = 0.5 * (1.0 + gl.nodes[q]);
          const double wq = 0.5 * gl.weights[q] * h * std::pow(c + s * h, theta - 1.0);
          left += wq * s;
          right += wq * (1.0 - s);
        }
      }
      out.w(i, k) += right * inv_gamma;
      if (k == 0) {
        out.start(i) += left * inv_gamma;
      } else {
        out.w(i, k - 1) += left * inv_gamma;
      }
    }
  }
  return out;
}

PathBatch frac_integral(const PathBatch& batch, double theta, double start_value) {
  if (batch.process != Process::X) throw DomainError("frac_integral: input must be an X batch");
  const FracWeights fw = frac_integral_weights(batch.grid, theta);
  RowMatrix y = batch.values * fw.w.transpose().triangularView<Eigen::Upper>();
  if (start_value != 0.0) y.rowwise() += start_value * fw.start.transpose();
  PathBatch out{batch.grid, std::move(y), batch.seed, batch.generator, Process::Y, batch.params};
  return out;
}

SupStatistic sup_statistic(const std::vector<double>& grid, const RowMatrix& values, double t) {
  if (grid.empty() || !(t > 0.0) || t > grid.back() * (1.0 + 1e-12)) {
    throw DomainError("sup_statistic: t must lie in (0, max grid time]");
  }
  const auto limit = t * (1.0 + 1e-12);
  const auto points = static_cast<Eigen::Index>(std::upper_bound(grid.begin(), grid.end(), limit) - grid.begin());
  SupStatistic out;
  out.points = static_cast<std::size_t>(points);
  out.grid_too_coarse = points < 32;
  out.values.resize(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out.values[r] = points == 0 ? 0.0 : values.row(r).head(points).cwiseAbs().maxCoeff();
  }
  return out;
}

SupStatistic sup_statistic(const PathBatch& batch, double t) { return sup_statistic(batch.grid, batch.values, t); }

double bridge_band_survival(double a, double b, double h, double eps) {
  const double w = 2.0 * eps;
  const double x = a + eps;
  const double y = b + eps;
  if (!(x > 0.0 && x < w && y > 0.0 && y < w)) return 0.0;
  if (!(h > 0.0)) return 1.0;
  // Leading image terms below exp(-745) underflow; the bridge surely stays inside.
  const double near = 2.0 * std::min(x * y, (w - x) * (w - y)) / h;
  const double across = 2.0 * w * (w - std::abs(y - x)) / h;
  if (near > 745.0 && across > 745.0) return 1.0;
  double p = 0.0;
  for (int k = -4; k <= 4; ++k) {
    const double kw = k * w;
    p += std::exp(-2.0 * kw * (kw + y - x) / h) - std::exp(-2.0 * (kw + x) * (kw + y) / h);
  }
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> brownian_band_survival(const std::vector<double>& grid, const RowMatrix& values, double t,
                                           double eps) {
  if (grid.empty() || !(t > 0.0) || t > grid.back() * (1.0 + 1e-12)) {
    throw DomainError("brownian_band_survival: t must lie in (0, max grid time]");
  }
  const double limit = t * (1.0 + 1e-12);
  const auto points = static_cast<Eigen::Index>(std::upper_bound(grid.begin(), grid.end(), limit) - grid.begin());
  std::vector<double> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    double prob = 1.0;
    double prev = 0.0, prev_t = 0.0;
    for (Eigen::Index k = 0; k < points && prob > 0.0; ++k) {
      prob *= bridge_band_survival(prev, values(r, k), grid[k] - prev_t, eps);
      prev = values(r, k);
      prev_t = grid[k];
    }
    out[r] = prob;
  }
  return out;
}

void write_batch_csv(const PathBatch& batch, std::ostream& out) {
  out << "path";
  for (double t : batch.grid) out << ',' << format_double(t);
  out << "\r\n";
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) out << ',' << format_double(batch.values(r, c));
    out << "\r\n";
  }
}

void write_batch_binary(const PathBatch& batch, std::ostream& out) {
  out.write("GFBM", 4);
  put_u32(out, kBinaryVersion);
  put_u64(out, batch.grid.size());
  put_u64(out, static_cast<std::uint64_t>(batch.values.rows()));
  put_u64(out, batch.seed);
  put_u32(out, static_cast<std::uint32_t>(batch.generator));
  put_u32(out, static_cast<std::uint32_t>(batch.process));
  put_f64(out, batch.params.gamma());
  put_f64(out, batch.params.alpha());
  put_f64(out, batch.params.theta());
  for (double t : batch.grid) put_f64(out, t);
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) put_f64(out, batch.values(r, c));
  }
}

PathBatch read_batch_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "GFBM", 4) != 0) throw IoError("path batch: bad magic");
  if (get_bytes(in, 4) != kBinaryVersion) throw IoError("path batch: unsupported version");
  const std::uint64_t m = get_bytes(in, 8);
  const std::uint64_t n = get_bytes(in, 8);
  const std::uint64_t seed = get_bytes(in, 8);
  const auto generator = get_bytes(in, 4);
  const auto process = get_bytes(in, 4);
  if (generator > 1 || process > 1) throw IoError("path batch: bad generator or process tag");
  if (m == 0 || m > (1u << 26) || n > (1ull << 40) / m) throw IoError("path batch: implausible dimensions");
  const double gamma = get_f64(in), alpha = get_f64(in), theta = get_f64(in);
  PathBatch batch{std::vector<double>(m), RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)),
                  seed, static_cast<GeneratorTag>(generator), static_cast<Process>(process),
                  ProcessParams::validate(gamma, alpha, theta)};
  for (auto& t : batch.grid) t = get_f64(in);
  for (Eigen::Index r = 0; r < batch.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) batch.values(r, c) = get_f64(in);
  }
  return batch;
}

}  // namespace gfbm
