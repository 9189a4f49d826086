// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfsir/error.hpp"
#include "mfsir/fluctuation.hpp"
#include "mfsir/meanfield.hpp"
#include "mfsir/particle_sim.hpp"
#include "mfsir/stats.hpp"

using namespace mfsir;

namespace {

ModelConfig reference_model(double sigma = 0.5) {
  ModelConfig m;
  m.dim = 1;
  m.gamma = 0.5;
  m.kernel = KernelSpec::gaussian(1.0, 1.0);
  m.drift = DriftSpec::saturating_attraction(0.5, 1.0);
  m.diffusion = DiffusionSpec::constant({sigma, sigma, sigma});
  m.initial = InitialLawSpec::standard(1, {0.9, 0.1, 0.0});
  return m;
}

ModelConfig frozen_jumps(double sigma) {
  ModelConfig m;
  m.dim = 1;
  m.gamma = 0.0;
  m.kernel = KernelSpec::constant(0.0);
  m.drift = DriftSpec::zero();
  m.diffusion = DiffusionSpec::constant({sigma, sigma, sigma});
  m.initial = InitialLawSpec::standard(1, {1.0, 0.0, 0.0});
  return m;
}

Trajectory logged_run(const ModelConfig& m, double dt, double T, std::size_t n,
                      std::uint64_t seed) {
  SimScheme scheme = SimScheme::uniform(dt, T);
  scheme.record_log = true;
  RngStream rng(seed, 0);
  return run(m, scheme, n, rng);
}

DensityTrajectory limit_of(const ModelConfig& m, double T, int cells = 512) {
  const Grid1D grid = Grid1D::covering(m, T, cells);
  return solve_pde(m, grid, T, pde_stable_dt(m, grid), T / 4);
}

}  // namespace

TEST_SUITE("fluctuation") {

TEST_CASE("eta of the constant function sums to zero over states") {
  const ModelConfig m = reference_model();
  const DensityTrajectory limit = limit_of(m, 1.0);
  const Trajectory tr = logged_run(m, 0.01, 1.0, 500, 11);
  const TestFunction one = TestFunction::constant(1.0);
  for (const ParticleEnsemble& ens : tr.snapshots) {
    double sum = 0.0;
    for (EpidemicState e : kStates) sum += eta_projection(ens, limit, ens.time, one, e);
    CHECK(std::abs(sum) < 1e-6);
    const double product = eta_projection(ens, limit, ens.time,
                                          StateTestFunction{one, one, one});
    CHECK(std::abs(product) < 1e-6);
  }
}

TEST_CASE("eta at time zero has the multinomial variance") {
  const ModelConfig m = reference_model();
  const DensityTrajectory limit = limit_of(m, 1.0);
  const TestFunction phi = TestFunction::gauss_hermite(0, 1.0);
  const std::size_t n = 2000, reps = 1000;
  std::vector<double> eta(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng = derive_stream(12, "eta0", r);
    const ParticleEnsemble ens = sample_initial(m.initial, 1, n, rng);
    eta[r] = eta_projection(ens, limit, 0.0, phi, EpidemicState::S);
  }
  // X ~ N(0, 1): E exp(-X^2 / 2) = 1 / sqrt(2), E exp(-X^2) = 1 / sqrt(3).
  const double expected = 0.9 / std::sqrt(3.0) - 0.81 / 2.0;
  const Summary s = summarize(eta);
  CAPTURE(s.variance);
  CHECK(std::abs(s.variance / expected - 1.0) < 0.15);
  CHECK(std::abs(s.mean) < 4.0 * s.se);
}

TEST_CASE("martingale of the zero function vanishes") {
  const Trajectory tr = logged_run(reference_model(), 0.01, 0.5, 100, 13);
  const ChannelPaths paths = martingale_channels(tr.log, tr.config, TestFunction());
  for (const auto& p : paths) {
    REQUIRE(p.size() == tr.log.steps + 1);
    for (double v : p) CHECK(v == 0.0);
  }
}

TEST_CASE("martingale vanishes without motion noise and jumps") {
  const Trajectory tr = logged_run(frozen_jumps(0.0), 0.01, 0.5, 100, 14);
  for (const TestFunction& phi : standard_bank()) {
    for (const auto& p : martingale_channels(tr.log, tr.config, phi)) {
      for (double v : p) CHECK(std::abs(v) < 1e-14);
    }
  }
}

TEST_CASE("frozen epidemic: M(x) is the scaled Brownian sum with QV sigma^2 t") {
  const double sigma = 0.7;
  const std::size_t n = 50;
  const Trajectory tr = logged_run(frozen_jumps(sigma), 0.01, 1.0, n, 15);
  const TestFunction x = TestFunction::poly_decay(1, 0.0);
  const ChannelPaths m = martingale_channels(tr.log, tr.config, x);
  const ChannelPaths qv = qv_channels(tr.log, tr.config, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < tr.log.steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) sum += tr.log.brownian[k * n + i];
    CHECK(m[0][k + 1] == doctest::Approx(sigma * sum / std::sqrt(double(n))));
    CHECK(qv[0][k + 1] == doctest::Approx(sigma * sigma * tr.log.time(k + 1)));
    CHECK(m[1][k + 1] == 0.0);
    CHECK(qv[2][k + 1] == 0.0);
  }
}

TEST_CASE("product-space paths decompose over channels") {
  const Trajectory tr = logged_run(reference_model(), 0.01, 1.0, 200, 16);
  const TestFunction phi = TestFunction::gauss_hermite(1, 1.0);
  const ChannelPaths m = martingale_channels(tr.log, tr.config, phi);
  const ChannelPaths qv = qv_channels(tr.log, tr.config, phi);
  const auto total = assemble_martingale(tr.log, tr.config, StateTestFunction{phi, phi, phi});
  for (EpidemicState e : kStates) {
    const std::size_t c = static_cast<std::size_t>(code(e));
    const auto single = qv_formula(tr.log, tr.config, on_state(phi, e));
    const auto channel = qv_formula(tr.log, tr.config, phi, e);
    const auto mart = assemble_martingale(tr.log, tr.config, on_state(phi, e));
    for (std::size_t k = 0; k < single.size(); ++k) {
      CHECK(single[k] == doctest::Approx(channel[k]).epsilon(1e-12));
      CHECK(channel[k] == qv[c][k]);
      CHECK(mart[k] == doctest::Approx(m[c][k]).epsilon(1e-12));
    }
  }
  for (std::size_t k = 0; k < total.size(); ++k) {
    CHECK(total[k] == doctest::Approx(m[0][k] + m[1][k] + m[2][k]).epsilon(1e-10));
  }
}

TEST_CASE("martingale paths without a log are rejected") {
  const ModelConfig m = reference_model();
  SimScheme scheme = SimScheme::uniform(0.01, 0.1);
  RngStream rng(17, 0);
  const Trajectory tr = run(m, scheme, 20, rng);
  CHECK_THROWS_AS(martingale_channels(tr.log, m, TestFunction::constant(1.0)), UsageError);
  CHECK_THROWS_AS(qv_formula(tr.log, m, TestFunction::constant(1.0), EpidemicState::S),
                  UsageError);
}

TEST_CASE("semimartingale residual shrinks linearly in dt") {
  const ModelConfig m = reference_model(0.1);
  const StateTestFunction phi{TestFunction::gauss_hermite(0, 1.0),
                              TestFunction::gauss_hermite(1, 1.0),
                              TestFunction::gauss_hermite(2, 1.0)};
  const double T = 0.5;
  const std::size_t reps = 20;
  double coarse = 0.0, fine = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto a = semimartingale_residual(logged_run(m, 0.02, T, 200, 100 + r).log, m, phi);
    const auto b = semimartingale_residual(logged_run(m, 0.01, T, 200, 100 + r).log, m, phi);
    CHECK(a.front() == 0.0);
    coarse += std::abs(a.back());
    fine += std::abs(b.back());
  }
  const double ratio = coarse / fine;
  CAPTURE(ratio);
  CHECK(ratio >= 1.4);
  CHECK(ratio <= 2.6);
}

TEST_CASE("clt experiment: constant function sums to zero, QV ratios near one") {
  const ModelConfig m = reference_model();
  const DensityTrajectory limit = limit_of(m, 1.0);
  CltOptions opt;
  opt.n = 200;
  opt.reps = 200;
  opt.final_time = 1.0;
  opt.scheme = SimScheme::uniform(0.01, 1.0);
  opt.bank = {TestFunction::constant(1.0), TestFunction::gauss_hermite(0, 1.0)};
  opt.seed = 18;
  const CltResult res = clt_experiment(m, &limit, opt);
  REQUIRE(res.samples.size() == opt.reps);
  REQUIRE(res.checkpoints.size() == 5);
  for (const FluctuationSample& s : res.samples) {
    for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
      double sum = 0.0;
      for (EpidemicState e : kStates) sum += s.eta[res.index(e, 0, c)];
      CHECK(std::abs(sum) < 1e-6);
    }
  }
  for (const QvRow& row : qv_table(res, res.checkpoints.size() - 1)) {
    if (!row.checked) continue;
    CAPTURE(row.ratio);
    CHECK(std::abs(row.ratio - 1.0) < 4.0 * row.ratio_se + 0.03);
  }
  const CltResult again = clt_experiment(m, &limit, opt);
  CHECK(again.samples.back().eta == res.samples.back().eta);
  CHECK(again.samples.back().qv == res.samples.back().qv);
}

TEST_CASE("qv_table needs martingale paths") {
  const ModelConfig m = reference_model();
  CltOptions opt;
  opt.n = 20;
  opt.reps = 3;
  opt.final_time = 0.2;
  opt.scheme = SimScheme::uniform(0.01, 0.2);
  opt.martingales = false;
  const CltResult res = clt_experiment(m, nullptr, opt);
  CHECK(std::isnan(res.samples[0].eta[0]));
  CHECK_THROWS_AS(qv_table(res, 0), UsageError);
}

}
