#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gfbm/covariance.hpp"
#include "gfbm/errors.hpp"
#include "gfbm/quadrature.hpp"
#include "gfbm/rng.hpp"
#include "gfbm/sampler.hpp"
#include "gfbm/special.hpp"

using namespace gfbm;

namespace {

CovMatrix manual(const std::vector<double>& grid, Eigen::MatrixXd entries) {
  return CovMatrix{grid, std::move(entries), Process::X, 0.0, ProcessParams::validate(0.0, 0.0, 1.0)};
}

double column_mean(const RowMatrix& v, Eigen::Index j) { return v.col(j).mean(); }

double column_cov(const RowMatrix& v, Eigen::Index i, Eigen::Index j) {
  const double mi = column_mean(v, i), mj = column_mean(v, j);
  return ((v.col(i).array() - mi) * (v.col(j).array() - mj)).sum() / static_cast<double>(v.rows() - 1);
}

// P(sup_[0,1] |W| < eps)
double chung_series(double eps) {
  double s = 0.0;
  for (int k = 0; k < 50; ++k) {
    s += (k % 2 ? -1.0 : 1.0) / (2 * k + 1) *
         std::exp(-(2 * k + 1) * (2 * k + 1) * std::numbers::pi * std::numbers::pi / (8 * eps * eps));
  }
  return 4.0 / std::numbers::pi * s;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(a == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  auto b = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(b == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream") {
  CHECK(NormalStream::to_unit(0, 0) > 0.0);
  CHECK(NormalStream::to_unit(0xffffffffu, 0xffffffffu) < 1.0);
  NormalStream s1(42, 7), s2(42, 7), s3(42, 8);
  std::vector<double> draws;
  for (int i = 0; i < 10; ++i) {
    const double x = s1.next();
    CHECK(x == s2.next());
    draws.push_back(x);
  }
  CHECK(s3.next() != draws[0]);

  const int n = 200000;
  NormalStream s(1, 0);
  double sum = 0, sum2 = 0, sum4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.next();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sum4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("factorize") {
  auto id = factorize(manual({1, 2, 3}, Eigen::MatrixXd::Identity(3, 3)));
  CHECK(id.jitter == 0.0);
  CHECK(id.lower == Eigen::MatrixXd::Identity(3, 3));

  Eigen::MatrixXd bm(2, 2);
  bm << 0.5, 0.5, 0.5, 1.0;
  auto f = factorize(manual({0.5, 1.0}, bm));
  CHECK(f.jitter == 0.0);
  CHECK(std::abs(f.lower(0, 0) - std::sqrt(0.5)) < 1e-15);
  CHECK(f.lower(0, 1) == 0.0);
  CHECK(std::abs(f.lower(1, 0) - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(f.lower(1, 1) - std::sqrt(0.5)) < 1e-15);

  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
  auto g = factorize(manual({0.5, 1.0}, singular));
  CHECK(g.jitter > 0.0);
  CHECK(g.jitter <= 1e-4);
  const double recon = (g.lower * g.lower.transpose() - singular).cwiseAbs().maxCoeff();
  CHECK(recon <= g.jitter + 1e-10);

  Eigen::MatrixXd broken(2, 2);
  broken << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(factorize(manual({0.5, 1.0}, broken)), NotFactorizable);
  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 0.2, 0.1, 1.0;
  CHECK_THROWS_AS(factorize(manual({0.5, 1.0}, skew)), DomainError);

  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  std::vector<double> grid;
  for (int k = 1; k <= 64; ++k) grid.push_back(k / 64.0);
  const auto cov = cov_matrix(p, grid, Process::Y);
  const auto fy = factorize(cov);
  const double err = (fy.lower * fy.lower.transpose() - cov.entries).cwiseAbs().maxCoeff();
  CHECK(err <= fy.jitter + 1e-10 * cov.entries.cwiseAbs().maxCoeff());
}

TEST_CASE("sample_gaussian") {
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const auto f1 = factorize(manual({1.0}, one));
  const auto a = sample_gaussian(f1, 1, 99);
  const auto b = sample_gaussian(f1, 1, 99);
  CHECK(a.values(0, 0) == b.values(0, 0));
  CHECK(a.values(0, 0) == NormalStream(99, 0).next());
  CHECK_THROWS_AS(sample_gaussian(f1, 0, 1), DomainError);

  auto bm = ProcessParams::validate(0.0, 0.0, 1.0);
  const std::vector<double> grid = {0.125, 0.25, 0.5, 0.75, 1.0};
  const auto cov = cov_matrix(bm, grid, Process::X);
  const auto f = factorize(cov);
  const std::size_t n = 100000;
  const auto batch = sample_gaussian(f, n, 2024);
  CHECK(batch.values.rows() == static_cast<Eigen::Index>(n));
  CHECK(batch.generator == GeneratorTag::Cholesky);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double c = cov.entries(i, i);
    CHECK(std::abs(column_cov(batch.values, i, i) - c) < 3.0 * std::sqrt(2.0 / n) * c);
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double sigma = std::sqrt((cov.entries(i, i) * cov.entries(j, j) + cov.entries(i, j) * cov.entries(i, j)) / n);
      CHECK(std::abs(column_cov(batch.values, i, j) - cov.entries(i, j)) < 4.0 * sigma);
    }
  }

  // Bit-identical across worker counts, and path i independent of the batch it sits in.
  const auto w1 = sample_gaussian(f, 1000, 5, 1);
  const auto w3 = sample_gaussian(f, 1000, 5, 3);
  CHECK(w1.values == w3.values);
  const auto other_seed = sample_gaussian(f, 1000, 6, 1);
  CHECK(other_seed.values != w1.values);
}

TEST_CASE("discretized X") {
  auto bm = ProcessParams::validate(0.0, 0.0, 1.0);
  const auto d = discretize_x(bm, {0.5, 1.0}, 4096, 8.0);
  CHECK(std::abs(d.variance(1) - 1.0) < 0.02);
  CHECK(std::abs(d.variance(0) - 0.5) < 0.01);

  const auto batch = sample_x_discretized(bm, {0.5, 1.0}, 4096, 8.0, 20000, 3);
  CHECK(batch.generator == GeneratorTag::Discretized);
  CHECK(std::abs(column_cov(batch.values, 1, 1) - 1.0) < 0.02 + 4.0 * std::sqrt(2.0 / 20000));

  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  const std::vector<double> grid = {0.25, 0.5, 1.0};
  const auto cov = cov_matrix(p, grid, Process::X);
  const auto dp = discretize_x(p, grid, 4096, 8.0);
  CHECK(std::abs(dp.variance(2) / cov.entries(2, 2) - 1.0) < 0.03);
  // One noise vector drives all grid times: cross covariances match too.
  const Eigen::MatrixXd joint = dp.coef * dp.coef.transpose();
  CHECK((joint - cov.entries).cwiseAbs().maxCoeff() < 1e-3 * cov.entries.maxCoeff());

  // Self-convergence: doubling the mesh at least halves the variance bias.
  double prev = 0.0;
  for (int mesh : {1024, 2048, 4096}) {
    const double bias = std::abs(discretize_x(p, {1.0}, mesh, 8.0).variance(0) - cov.entries(2, 2));
    if (mesh > 1024) CHECK(bias <= 0.5 * prev);
    prev = bias;
  }

  auto neg = ProcessParams::validate(0.2, -0.3, 1.0);
  const auto cn = cov_matrix(neg, grid, Process::X);
  const auto dn = discretize_x(neg, grid, 4096, 8.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(dn.variance(i) / cn.entries(i, i) - 1.0) < 0.03);

  CHECK_THROWS_AS(discretize_x(p, grid, 100, 8.0), DomainError);
  CHECK_THROWS_AS(discretize_x(p, grid, 1024, 0.0), DomainError);
}

TEST_CASE("fractional integral") {
  const std::vector<double> grid = {0.1, 0.15, 0.3, 0.31, 0.5, 0.8, 1.0, 1.7};
  auto bm = ProcessParams::validate(0.0, 0.0, 1.0);
  auto batch_of = [&](auto f) {
    RowMatrix v(1, static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) v(0, k) = f(grid[k]);
    return PathBatch{grid, v, 0, GeneratorTag::Cholesky, Process::X, bm};
  };
  const auto ones = frac_integral(batch_of([](double) { return 1.0; }), 1.0, 1.0);
  CHECK(ones.process == Process::Y);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(ones.values(0, k) - grid[k]) < 1e-14);

  const auto lin = frac_integral(batch_of([](double u) { return u; }), 0.5);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(lin.values(0, k) - std::pow(grid[k], 1.5) / std::tgamma(2.5)) < 1e-13);
  }
  for (double theta : {0.2, 2.3}) {
    const auto y = frac_integral(batch_of([](double u) { return 3.0 * u; }), theta);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(y.values(0, k) - 3.0 * std::pow(grid[k], 1.0 + theta) / std::tgamma(2.0 + theta)) < 1e-12);
    }
  }

  // A curved input converges at second order on uniform grids.
  double prev = 0.0;
  for (int m : {32, 64, 128}) {
    std::vector<double> g;
    for (int k = 1; k <= m; ++k) g.push_back(static_cast<double>(k) / m);
    RowMatrix v(1, m);
    for (int k = 0; k < m; ++k) v(0, k) = g[k] * g[k];
    const auto y = frac_integral(PathBatch{g, v, 0, GeneratorTag::Cholesky, Process::X, bm}, 0.5);
    const double err = std::abs(y.values(0, m - 1) - 2.0 / std::tgamma(3.5));
    if (m > 32) CHECK(err < 0.3 * prev);
    prev = err;
  }

  // Integrated Brownian motion: Var Y(1) = 1/3.
  std::vector<double> g;
  for (int k = 1; k <= 256; ++k) g.push_back(k / 256.0);
  const auto f = factorize(cov_matrix(bm, g, Process::X));
  const std::size_t n = 20000;
  const auto y = frac_integral(sample_gaussian(f, n, 77), 1.0);
  const double var = column_cov(y.values, 255, 255);
  CHECK(std::abs(var - 1.0 / 3.0) < 4.0 * std::sqrt(2.0 / n) / 3.0 + 1e-4);

  auto yb = y;
  CHECK_THROWS_AS(frac_integral(yb, 1.0), DomainError);
  CHECK_THROWS_AS(frac_integral_weights(g, 0.0), DomainError);
}

TEST_CASE("sup statistic") {
  std::vector<double> grid;
  for (int k = 1; k <= 40; ++k) grid.push_back(k / 40.0);
  RowMatrix v = RowMatrix::Constant(2, 40, -2.5);
  v.row(1).setZero();
  v(1, 3) = 1;
  v(1, 4) = -3;
  v(1, 5) = 2;
  v(1, 39) = 10;
  const auto s = sup_statistic(grid, v, 0.5);
  CHECK(s.values[0] == 2.5);
  CHECK(s.values[1] == 3.0);
  CHECK(s.points == 20);
  CHECK(s.grid_too_coarse);
  const auto full = sup_statistic(grid, v, 1.0);
  CHECK(full.values[1] == 10.0);
  CHECK_FALSE(full.grid_too_coarse);
  CHECK_THROWS_AS(sup_statistic(grid, v, 1.5), DomainError);
}

TEST_CASE("Brownian bridge band survival") {
  CHECK(bridge_band_survival(0.5, 0.0, 1.0, 0.4) == 0.0);
  CHECK(bridge_band_survival(0.0, 0.0, 1e-9, 1.0) == 1.0);
  // One-sided limit: wide band, start and end near the upper barrier.
  const double p = bridge_band_survival(0.9, 0.8, 0.01, 1.0);
  CHECK(std::abs(p - (1.0 - std::exp(-2.0 * 0.1 * 0.2 / 0.01))) < 1e-12);

  // Averaging over the endpoint law recovers P(sup_[0,1] |W| < eps).
  for (double eps : {0.5, 1.0, 2.0}) {
    SingularIntegrand f{[eps](double b) {
                          return bridge_band_survival(0.0, b, 1.0, eps) * std::exp(-0.5 * b * b) /
                                 std::sqrt(2.0 * std::numbers::pi);
                        },
                        0.0, 0.0};
    const double avg = integrate_singular(f, -eps, eps, 1e-12).value;
    CHECK(std::abs(avg - chung_series(eps)) < 1e-9);
  }
}

TEST_CASE("batch serialization") {
  auto p = ProcessParams::validate(0.5, 0.2, 0.5);
  const std::vector<double> grid = {0.25, 0.5, 1.0};
  const auto f = factorize(cov_matrix(p, grid, Process::Y));
  const auto batch = sample_gaussian(f, 5, 11);

  std::stringstream bin;
  write_batch_binary(batch, bin);
  const std::string bytes = bin.str();
  CHECK(bytes.substr(0, 4) == "GFBM");
  CHECK(bytes.size() == 4 + 4 + 8 * 3 + 4 * 2 + 8 * 3 + 8 * 3 + 8 * 15);
  const auto back = read_batch_binary(bin);
  CHECK(back.values == batch.values);
  CHECK(back.grid == batch.grid);
  CHECK(back.seed == 11);
  CHECK(back.process == Process::Y);
  CHECK(back.params == p);

  std::stringstream bad("GFBX rest");
  CHECK_THROWS_AS(read_batch_binary(bad), IoError);
  std::stringstream truncated(bytes.substr(0, 40));
  CHECK_THROWS_AS(read_batch_binary(truncated), IoError);

  std::ostringstream csv;
  write_batch_csv(batch, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,0.25,0.5,1\r");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  const auto comma = line.find(',', 2);
  CHECK(std::stod(line.substr(2, comma - 2)) == batch.values(0, 0));
}
