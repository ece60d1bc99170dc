#include <cmath>
#include <vector>

#include "doctest.h"
#include "gfbm/errors.hpp"
#include "gfbm/params.hpp"

using gfbm::ParamError;
using gfbm::ProcessParams;

namespace {

std::vector<std::string> rejected_fields(double g, double a, double t) {
  try {
    ProcessParams::validate(g, a, t);
  } catch (const ParamError& e) {
    std::vector<std::string> fields;
    for (const auto& v : e.violations()) fields.push_back(v.field);
    return fields;
  }
  return {};
}

}  // namespace

TEST_CASE("validate accepts interior points") {
  CHECK_NOTHROW(ProcessParams::validate(0.0, 0.0, 1.0));
  CHECK_NOTHROW(ProcessParams::validate(0.5, 0.2, 0.5));
}

TEST_CASE("validate rejects boundaries") {
  CHECK(rejected_fields(1.0, 0.49, 1.0) == std::vector<std::string>{"gamma"});
  CHECK(rejected_fields(0.5, 0.4, 0.0) == std::vector<std::string>{"theta"});
  // alpha window is (-1/2 + gamma/2, 1/2), open at both ends
  CHECK(rejected_fields(0.5, -0.25, 1.0) == std::vector<std::string>{"alpha"});
  CHECK(rejected_fields(0.0, 0.5, 1.0) == std::vector<std::string>{"alpha"});
  // the wider window up to 1/2 + gamma/2 is not accepted
  CHECK(rejected_fields(0.5, 0.6, 1.0) == std::vector<std::string>{"alpha"});
}

TEST_CASE("validate reports every violation") {
  const auto fields = rejected_fields(1.5, 0.9, -1.0);
  CHECK(fields == std::vector<std::string>{"gamma", "alpha", "theta"});
  CHECK(rejected_fields(NAN, 0.0, INFINITY).size() == 3);
}

TEST_CASE("derive") {
  auto bm = gfbm::derive(ProcessParams::validate(0.0, 0.0, 1.0));
  CHECK(bm.hurst == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bm.beta == doctest::Approx(1.5).epsilon(1e-15));

  auto d = gfbm::derive(ProcessParams::validate(0.5, 0.2, 0.5));
  CHECK(d.hurst == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(d.beta == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(d.y_index == doctest::Approx(0.95).epsilon(1e-15));

  for (double h0 : {0.1, 0.3, 0.7, 0.95}) {
    auto fbm = gfbm::derive(ProcessParams::validate(0.0, h0 - 0.5, 1.0));
    CHECK(fbm.hurst == doctest::Approx(h0).epsilon(1e-14));
  }
}

TEST_CASE("accepted region matches the constraints on a straddling grid") {
  const std::vector<double> gammas = {-0.1, 0.0, 0.3, 0.6, 0.999, 1.0, 1.2};
  const std::vector<double> thetas = {-0.5, 0.0, 1e-9, 0.5, 3.0};
  for (double g : gammas) {
    for (int k = -12; k <= 12; ++k) {
      const double a = -0.5 + 0.5 * g + 0.05 * k;
      for (double t : thetas) {
        const bool expected = g >= 0.0 && g < 1.0 && a > -0.5 + 0.5 * g && a < 0.5 && t > 0.0;
        bool accepted = true;
        try {
          auto p = ProcessParams::validate(g, a, t);
          auto d = gfbm::derive(p);
          CHECK(d.hurst > 0.0);
          CHECK(d.hurst < 1.0);
          CHECK(d.beta > 0.0);
          CHECK(std::abs((d.hurst + t) - (d.beta - g / 2)) < 1e-14);
        } catch (const ParamError&) {
          accepted = false;
        }
        CHECK_MESSAGE(accepted == expected, "g=" << g << " a=" << a << " t=" << t);
      }
    }
  }
}
