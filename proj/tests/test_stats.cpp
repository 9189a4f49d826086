// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfsir/error.hpp"
#include "mfsir/rng.hpp"
#include "mfsir/stats.hpp"

using namespace mfsir;

namespace {

std::vector<double> normals(RngStream& rng, std::size_t n, double shift = 0.0) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal() + shift;
  return x;
}

RateTable exact_table(double c, double exponent) {
  RateTable t;
  for (std::size_t n : {100u, 400u, 1600u, 6400u}) {
    t.rows.push_back({n, 10, c * std::pow(static_cast<double>(n), exponent), 0.01});
  }
  return t;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("fit_power_law on exact power laws") {
  const FitResult half = fit_power_law(exact_table(3.0, -0.5));
  CHECK(std::abs(half.slope + 0.5) < 1e-10);
  CHECK(half.r2 == doctest::Approx(1.0));
  CHECK(fit_power_law(exact_table(3.0, -1.0 / 3.0)).slope == doctest::Approx(-1.0 / 3.0));
  const FitResult scaled = fit_power_law(exact_table(30.0, -0.5));
  CHECK(scaled.slope == doctest::Approx(half.slope).epsilon(1e-12));
  CHECK(scaled.intercept - half.intercept == doctest::Approx(std::log(10.0)));
}

TEST_CASE("fit_power_law rejects unusable tables") {
  RateTable t;
  t.rows.push_back({100, 10, 0.1, 0.01});
  CHECK_THROWS(fit_power_law(t));
  t.rows.push_back({400, 10, -1.0, 0.01});
  CHECK_THROWS(fit_power_law(t));
}

TEST_CASE("ks_two_sample examples") {
  RngStream rng(1, 0);
  const auto a = normals(rng, 500);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  const auto shifted = normals(rng, 500, 3.0);
  CHECK(ks_two_sample(a, shifted).p_value < 1e-6);
}

TEST_CASE("ks_two_sample calibration") {
  RngStream rng(2, 0);
  int rejections = 0;
  for (int r = 0; r < 200; ++r) {
    const auto a = normals(rng, 500), b = normals(rng, 500);
    rejections += ks_two_sample(a, b).reject(0.05) ? 1 : 0;
  }
  const double rate = rejections / 200.0;
  CHECK(rate >= 0.01);
  CHECK(rate <= 0.10);
}

TEST_CASE("ks statistic is invariant under monotone transforms") {
  RngStream rng(3, 0);
  auto a = normals(rng, 300), b = normals(rng, 200, 0.2);
  const double before = ks_two_sample(a, b).statistic;
  for (double& v : a) v = std::exp(v) * 2.0 + 1.0;
  for (double& v : b) v = std::exp(v) * 2.0 + 1.0;
  CHECK(ks_two_sample(a, b).statistic == before);
}

TEST_CASE("normality_screen examples") {
  std::vector<double> grid;
  const int n = 1000;
  for (int i = 0; i < n; ++i) grid.push_back(normal_quantile((i + 0.5) / n));
  const TestVerdict exact = normality_screen(grid);
  CHECK(exact.statistic < 0.01);
  CHECK(exact.approximate);

  RngStream rng(4, 0);
  std::vector<double> expo(n), unif(n);
  for (double& v : expo) v = rng.exponential(1.0);
  for (double& v : unif) v = rng.uniform();
  CHECK(normality_screen(expo).skew_z > 5.0);
  CHECK(normality_screen(unif).kurtosis_z < -5.0);
  CHECK(normality_screen(expo).reject(0.01));
  CHECK_FALSE(normality_screen(normals(rng, n)).reject(0.001));
}

TEST_CASE("cov_with_ci examples") {
  RngStream rng(5, 0);
  const auto u = normals(rng, 400);
  RngStream boot(5, 1);
  const CovEstimate self = cov_with_ci(u, u, 200, boot);
  const double var = summarize(u).variance;
  CHECK(self.estimate == doctest::Approx(var));
  CHECK(self.lower <= var);
  CHECK(self.upper >= var);
  std::vector<double> twice(u);
  for (double& v : twice) v *= 2.0;
  const CovEstimate lin = cov_with_ci(u, twice, 200, boot);
  CHECK(lin.estimate == doctest::Approx(2.0 * var));
  CHECK(lin.lower <= lin.estimate);
  CHECK(lin.upper >= lin.estimate);
}

TEST_CASE("cov_with_ci calibration for independent samples") {
  RngStream rng(6, 0);
  int covered = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const auto u = normals(rng, 200), v = normals(rng, 200);
    RngStream boot = derive_stream(6, "boot", static_cast<std::uint64_t>(t));
    const CovEstimate c = cov_with_ci(u, v, 200, boot);
    covered += (c.lower <= 0.0 && 0.0 <= c.upper) ? 1 : 0;
  }
  CHECK(covered >= 90);
}

TEST_CASE("chi_square_homogeneity") {
  CHECK(chi_square_homogeneity({{10, 20, 30}, {10, 20, 30}}).statistic == doctest::Approx(0.0));
  CHECK(chi_square_homogeneity({{50, 0, 50}, {0, 0, 100}}).p_value < 1e-6);
  const TestVerdict v = chi_square_homogeneity({{5, 0, 5}, {6, 0, 4}});
  CHECK(v.p_value > 0.5);
}

TEST_CASE("summaries and quantiles") {
  const std::vector<double> x{1, 2, 3, 4};
  const Summary s = summarize(x);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(covariance(x, x) == doctest::Approx(5.0 / 3.0));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(kolmogorov_q(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("verdicts are deterministic") {
  RngStream a(7, 0), b(7, 0);
  const auto x = normals(a, 300), y = normals(b, 300);
  CHECK(ks_two_sample(x, y).statistic == 0.0);
  RngStream b1(8, 0), b2(8, 0);
  CHECK(cov_with_ci(x, x, 50, b1).lower == cov_with_ci(y, y, 50, b2).lower);
}

}
