// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mfsir/error.hpp"
#include "mfsir/measures.hpp"

using namespace mfsir;

namespace {

Cloud uniform_cloud(std::vector<double> x, int dim = 1) {
  Cloud c;
  c.dim = dim;
  const std::size_t n = x.size() / static_cast<std::size_t>(dim);
  c.positions = std::move(x);
  c.weights.assign(n, 1.0 / static_cast<double>(n));
  return c;
}

Cloud gaussian_cloud(RngStream& rng, std::size_t n, int dim, double shift = 0.0) {
  std::vector<double> x(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal() + (i % static_cast<std::size_t>(dim) == 0 ? shift : 0.0);
  }
  return uniform_cloud(std::move(x), dim);
}

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("pair examples") {
  const Cloud c{1, {0.0, 2.0}, {0.5, 0.5}};
  CHECK(pair(c, TestFunction::constant(1.0)) == doctest::Approx(1.0));
  CHECK(pair(Cloud{}, TestFunction::constant(1.0)) == 0.0);
  CHECK(pair(c, TestFunction::poly_decay(2, 0.0)) == doctest::Approx(2.0));
}

TEST_CASE("product-space pairing splits by state") {
  MarkedCloud m{1, {0.0, 1.0, 2.0}, {0.2, 0.3, 0.5},
                {EpidemicState::S, EpidemicState::I, EpidemicState::R}};
  const TestFunction f = TestFunction::gauss_hermite(1, 1.0);
  const StateTestFunction phi{f, f.scaled(2.0), f.scaled(-1.0)};
  const StateClouds parts = split_by_state(m);
  double sum = 0.0;
  for (std::size_t e = 0; e < 3; ++e) sum += pair(parts[e], phi[e]);
  CHECK(pair(m, phi) == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("w1_1d examples") {
  const Cloud a = uniform_cloud({0.0, 1.0}), b = uniform_cloud({0.5, 1.5});
  CHECK(w1_1d(a, a) == 0.0);
  CHECK(w1_1d(a, b) == doctest::Approx(0.5));
  CHECK(w1_exact_assignment(a, b) == doctest::Approx(0.5));
  RngStream rng(1, 0);
  const Cloud c = gaussian_cloud(rng, 40, 1);
  Cloud moved = c;
  for (double& x : moved.positions) x -= 1.7;
  CHECK(w1_1d(c, moved) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("w1_1d is a metric on random triples") {
  RngStream rng(2, 0);
  for (int t = 0; t < 1000; ++t) {
    const Cloud a = gaussian_cloud(rng, 7, 1), b = gaussian_cloud(rng, 7, 1, 0.5),
                c = gaussian_cloud(rng, 7, 1, -0.3);
    CHECK(w1_1d(a, b) == w1_1d(b, a));
    CHECK(w1_1d(a, c) <= w1_1d(a, b) + w1_1d(b, c) + 1e-10);
  }
}

TEST_CASE("w1_1d weighted clouds") {
  const Cloud a{1, {0.0, 1.0}, {0.25, 0.75}}, b{1, {0.0}, {1.0}};
  CHECK(w1_1d(a, b) == doctest::Approx(0.75));
  const Cloud c{1, {0.0}, {0.5}};
  CHECK_THROWS_AS(w1_1d(a, c), UsageError);
}

TEST_CASE("Kantorovich duality spot check") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Cloud a = gaussian_cloud(rng, 3, 1), b = gaussian_cloud(rng, 3, 1, 0.4);
    std::vector<double> knots = a.positions;
    knots.insert(knots.end(), b.positions.begin(), b.positions.end());
    std::sort(knots.begin(), knots.end());
    const double w = w1_1d(a, b);
    double best = 0.0;
    for (int f = 0; f < 200; ++f) {
      std::vector<double> slope(knots.size() - 1);
      for (double& s : slope) s = rng.uniform() < 0.5 ? -1.0 : 1.0;
      auto eval = [&](double x) {
        double v = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
          const double lo = knots[k], hi = knots[k + 1];
          if (x > lo) v += slope[k] * (std::min(x, hi) - lo);
        }
        return v;
      };
      double gap = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) gap += a.weights[i] * eval(a.positions[i]);
      for (std::size_t i = 0; i < b.size(); ++i) gap -= b.weights[i] * eval(b.positions[i]);
      CHECK(std::abs(gap) <= w + 1e-12);
      best = std::max(best, std::abs(gap));
    }
    CHECK(best >= 0.95 * w);
  }
}

TEST_CASE("w1_1d_to_density examples") {
  const Grid1D unit{0.0, 1.0, 100};
  const std::vector<double> flat(100, 0.01);
  CHECK(w1_1d_to_density(Cloud{1, {0.5}, {1.0}}, unit, flat) == doctest::Approx(0.25));
  Cloud atoms;
  for (int c = 0; c < unit.cells; ++c) atoms.add(std::vector<double>{unit.center(c)}, 0.01);
  CHECK(w1_1d_to_density(atoms, unit, flat) <= unit.h());

  // Dilation by 3 about the origin.
  const Grid1D wide{0.0, 3.0, 100};
  const Cloud pts{1, {0.1, 0.4, 0.8}, {0.2, 0.3, 0.5}};
  const Cloud pts3{1, {0.3, 1.2, 2.4}, {0.2, 0.3, 0.5}};
  CHECK(w1_1d_to_density(pts3, wide, flat) ==
        doctest::Approx(3.0 * w1_1d_to_density(pts, unit, flat)).epsilon(1e-12));
  CHECK_THROWS_AS(w1_1d_to_density(Cloud{1, {0.5}, {0.5}}, unit, flat), UsageError);
}

TEST_CASE("w1_exact_assignment examples") {
  const Cloud a = uniform_cloud({0.0, 0.0, 1.0, 1.0}, 2), b = uniform_cloud({1.0, 1.0, 0.0, 0.0}, 2);
  CHECK(w1_exact_assignment(a, a) == 0.0);
  CHECK(w1_exact_assignment(a, b) == doctest::Approx(0.0).epsilon(1e-15));
  RngStream rng(4, 0);
  for (int t = 0; t < 10; ++t) {
    const Cloud x = gaussian_cloud(rng, 30, 1), y = gaussian_cloud(rng, 30, 1, 0.2);
    CHECK(std::abs(w1_exact_assignment(x, y) - w1_1d(x, y)) <= 1e-10);
  }
}

TEST_CASE("sliced_w1 against the exact assignment in d = 2") {
  RngStream rng(5, 0);
  const Cloud a0 = gaussian_cloud(rng, 64, 2);
  CHECK(sliced_w1(a0, a0, 32, rng) == 0.0);
  for (int t = 0; t < 10; ++t) {
    const Cloud a = gaussian_cloud(rng, 64, 2), b = gaussian_cloud(rng, 64, 2, 2.0);
    const double exact = w1_exact_assignment(a, b);
    CHECK(sliced_w1(a, b, 256, rng) == doctest::Approx(exact).epsilon(0.15));
  }
}

TEST_CASE("sliced_w1 grows with translation") {
  RngStream rng(6, 0);
  const Cloud a = gaussian_cloud(rng, 64, 2);
  double prev = 0.0;
  for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    Cloud b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b.positions[2 * i] += c;
    RngStream dirs(7, 0);
    const double s = sliced_w1(a, b, 128, dirs);
    CHECK(s > prev);
    CHECK(s <= w1_exact_assignment(a, b) * 1.15);
    prev = s;
  }
  CHECK(sliced_scale(2) == doctest::Approx(std::numbers::pi / 2));
  CHECK(sliced_scale(3) == doctest::Approx(2.0));
}

TEST_CASE("SlicedReference matches sliced_w1 on the same directions") {
  RngStream rng(8, 0);
  const Cloud ref = gaussian_cloud(rng, 500, 3), c = gaussian_cloud(rng, 200, 3, 0.3);
  RngStream d1(9, 0), d2(9, 0);
  const SlicedReference sr(ref, random_directions(3, 64, d1));
  CHECK(sr.distance(c) == doctest::Approx(sliced_w1(c, ref, 64, d2)).epsilon(1e-12));
}

TEST_CASE("weighted_sobolev_norm examples") {
  CHECK(weighted_sobolev_norm(TestFunction(), {}).value == 0.0);
  const TestFunction g = TestFunction::gauss_hermite(0, 1.0);
  CHECK(weighted_sobolev_norm(g, {0, 0.0}).value == doctest::Approx(std::pow(std::numbers::pi, 0.25)).epsilon(1e-6));
  CHECK(weighted_sobolev_norm(g, {0, 0.0}).value == doctest::Approx(1.33133).epsilon(1e-5));
  for (const auto& phi : standard_bank()) {
    for (int j = 0; j <= 2; ++j) {
      double prev = INFINITY;
      for (double alpha : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double v = weighted_sobolev_norm(phi, {j, alpha}).value;
        CHECK(v <= prev + 1e-12);
        prev = v;
      }
    }
  }
}

TEST_CASE("bank functions are dominated by their weighted norms") {
  // |phi(x)| <= C (1 + |x|^alpha) ||phi||_{1,alpha}, C fixed at 1.
  constexpr double kC = 1.0;
  for (double alpha : {1.0, 2.0}) {
    for (const auto& phi : standard_bank()) {
      const double n = weighted_sobolev_norm(phi, {1, alpha, 40.0, 8001}).value;
      for (double x = -40.0; x <= 40.0; x += 0.05) {
        CHECK(std::abs(phi(x)) <= kC * (1.0 + std::pow(std::abs(x), alpha)) * n);
      }
    }
  }
}

}
