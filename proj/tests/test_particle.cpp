// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "mfsir/error.hpp"
#include "mfsir/particle_sim.hpp"
#include "mfsir/rng.hpp"
#include "mfsir/stats.hpp"

using namespace mfsir;

namespace {

ModelConfig reference_model() {
  ModelConfig m;
  m.dim = 1;
  m.gamma = 0.5;
  m.kernel = KernelSpec::gaussian(1.0, 1.0);
  m.drift = DriftSpec::saturating_attraction(0.5, 1.0);
  m.diffusion = DiffusionSpec::constant({0.5, 0.5, 0.5});
  m.initial = InitialLawSpec::standard(1, {0.9, 0.1, 0.0});
  return m;
}

ModelConfig well_mixed(double beta, double gamma) {
  ModelConfig m;
  m.dim = 1;
  m.gamma = gamma;
  m.kernel = KernelSpec::constant(beta);
  m.drift = DriftSpec::zero();
  m.diffusion = DiffusionSpec::constant({0.0, 0.0, 0.0});
  m.initial = InitialLawSpec::standard(1, {0.9, 0.1, 0.0});
  return m;
}

ParticleEnsemble at_origin(std::size_t n, std::size_t infected) {
  ParticleEnsemble ens(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    ens.states[i] = i < infected ? EpidemicState::I : EpidemicState::S;
  }
  return ens;
}

// Continuous-time SIR chain: each S individual is infected at rate beta*I/N,
// each I individual recovers at rate gamma.
std::vector<double> gillespie_infected(std::size_t n, std::size_t i0, double beta, double gamma,
                                       const std::vector<double>& times, RngStream& rng) {
  double s = static_cast<double>(n - i0), inf = static_cast<double>(i0), t = 0.0;
  std::vector<double> out;
  std::size_t next = 0;
  while (next < times.size()) {
    const double a1 = beta * s * inf / static_cast<double>(n);
    const double a2 = gamma * inf;
    const double total = a1 + a2;
    const double dt = total > 0.0 ? rng.exponential(total) : std::numeric_limits<double>::infinity();
    while (next < times.size() && t + dt > times[next]) {
      out.push_back(inf);
      ++next;
    }
    if (next == times.size()) break;
    t += dt;
    if (rng.uniform() * total < a1) {
      s -= 1;
      inf += 1;
    } else {
      inf -= 1;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("particle") {

TEST_CASE("infection_rate examples") {
  ParticleEnsemble ens(1, 3);
  ens.positions = {0.0, 1.0, 2.0};
  ens.states = {EpidemicState::S, EpidemicState::S, EpidemicState::S};
  CHECK(infection_rate(1, ens, KernelSpec::gaussian(1, 1)) == 0.0);
  ens.states = {EpidemicState::S, EpidemicState::I, EpidemicState::I};
  CHECK(infection_rate(0, ens, KernelSpec::gaussian(1, 1)) ==
        doctest::Approx((std::exp(-0.5) + std::exp(-2.0)) / 3.0));
  CHECK(infection_rate(0, ens, KernelSpec::gaussian(1, 1)) ==
        doctest::Approx(0.24729).epsilon(1e-5));
  CHECK(infection_rate(0, ens, KernelSpec::constant(0.6)) == doctest::Approx(0.6 * 2.0 / 3.0));
  CHECK(infection_rate(1, ens, KernelSpec::constant(0.6)) == 0.0);
}

TEST_CASE("frozen dynamics leave the ensemble unchanged") {
  ModelConfig m = well_mixed(0.0, 0.0);
  const SimScheme scheme = SimScheme::uniform(0.01, 1.0);
  RngStream rng(1, 0);
  ParticleEnsemble ens = sample_initial(m.initial, 1, 50, rng);
  const ParticleEnsemble before = ens;
  for (int k = 0; k < 10; ++k) step(ens, m, scheme, rng);
  CHECK(ens.positions == before.positions);
  CHECK(ens.states == before.states);
  CHECK(ens.time == doctest::Approx(0.1));
}

TEST_CASE("a single individual feels no drift") {
  ModelConfig m = reference_model();
  m.diffusion = DiffusionSpec::constant({0.0, 0.0, 0.0});
  RngStream rng(2, 0);
  ParticleEnsemble ens(1, 1);
  ens.positions = {0.7};
  step(ens, m, SimScheme::uniform(0.01, 1.0), rng);
  CHECK(ens.positions[0] == 0.7);
}

TEST_CASE("large gamma dt recovers every infected individual") {
  ModelConfig m = well_mixed(0.0, 2000.0);
  RngStream rng(3, 0);
  ParticleEnsemble ens = at_origin(200, 200);
  step(ens, m, SimScheme::uniform(0.01, 1.0), rng);
  // P(some individual survives) = 1 - (1 - e^{-20})^200 < 1e-6.
  CHECK(ens.counts()[2] == 200);
}

TEST_CASE("switched-off channels keep their counts") {
  RngStream rng(4, 0);
  ModelConfig no_infection = reference_model();
  no_infection.kernel = KernelSpec::constant(0.0);
  const SimScheme scheme = SimScheme::uniform(0.01, 2.0, 4);
  const Trajectory a = run(no_infection, scheme, 300, rng);
  for (const auto& s : a.snapshots) CHECK(s.counts()[0] == a.snapshots[0].counts()[0]);

  ModelConfig no_recovery = reference_model();
  no_recovery.gamma = 0.0;
  const Trajectory b = run(no_recovery, scheme, 300, rng);
  for (const auto& s : b.snapshots) CHECK(s.counts()[2] == b.snapshots[0].counts()[2]);

  ModelConfig still = well_mixed(1.0, 0.5);
  const Trajectory c = run(still, scheme, 300, rng);
  CHECK(c.snapshots.back().positions == c.snapshots.front().positions);
}

TEST_CASE("empirical_measure examples") {
  ParticleEnsemble all_s(1, 4);
  StateClouds c = empirical_measure(all_s);
  CHECK(c[0].mass() == doctest::Approx(1.0));
  CHECK(c[1].size() == 0);
  CHECK(c[2].size() == 0);
  ParticleEnsemble two(1, 2);
  two.states = {EpidemicState::S, EpidemicState::I};
  c = empirical_measure(two);
  CHECK(c[0].mass() == doctest::Approx(0.5));
  CHECK(c[1].mass() == doctest::Approx(0.5));
  CHECK(c[2].mass() == 0.0);
  RngStream rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const ParticleEnsemble e = sample_initial(InitialLawSpec::standard(1, {0.3, 0.3, 0.4}), 1,
                                              17 + static_cast<std::size_t>(trial), rng);
    c = empirical_measure(e);
    CHECK(c[0].mass() + c[1].mass() + c[2].mass() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("event log invariants in both jump modes") {
  for (JumpMode mode : {JumpMode::split_step, JumpMode::thinning}) {
    SimScheme scheme = SimScheme::uniform(0.02, 2.0);
    scheme.mode = mode;
    scheme.record_log = true;
    RngStream rng(6, static_cast<std::uint64_t>(mode));
    const Trajectory tr = run(reference_model(), scheme, 200, rng);
    const EventLog& log = tr.log;
    REQUIRE(log.steps == scheme.steps());
    std::size_t prev_s = log.n + 1, prev_r = 0;
    for (std::size_t k = 0; k <= log.steps; ++k) {
      std::array<std::size_t, 3> c{0, 0, 0};
      for (std::size_t i = 0; i < log.n; ++i) ++c[static_cast<std::size_t>(code(log.state(k, i)))];
      CHECK(c[0] + c[1] + c[2] == log.n);
      CHECK(c[0] <= prev_s);
      CHECK(c[2] >= prev_r);
      prev_s = c[0];
      prev_r = c[2];
    }
    for (double v : log.compensator) CHECK(v >= 0.0);
    std::map<std::pair<std::size_t, std::uint32_t>, int> per_step;
    for (const JumpRecord& j : log.jumps) {
      const bool legal = (j.from == EpidemicState::S && j.to == EpidemicState::I) ||
                         (j.from == EpidemicState::I && j.to == EpidemicState::R);
      CHECK(legal);
      ++per_step[{static_cast<std::size_t>(j.time / log.dt + 1e-9), j.individual}];
    }
    if (mode == JumpMode::split_step) {
      for (const auto& [key, count] : per_step) CHECK(count == 1);
    }
  }
}

TEST_CASE("non-finite positions raise a numerical error") {
  ModelConfig m = reference_model();
  RngStream rng(7, 0);
  ParticleEnsemble ens(1, 3);
  ens.positions = {0.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
  CHECK_THROWS_AS(step(ens, m, SimScheme::uniform(0.01, 1.0), rng), NumericalError);
}

TEST_CASE("same stream gives the same trajectory") {
  const SimScheme scheme = SimScheme::uniform(0.01, 1.0, 2);
  RngStream a = derive_stream(9, "t", 0), b = derive_stream(9, "t", 0);
  const Trajectory x = run(reference_model(), scheme, 100, a);
  const Trajectory y = run(reference_model(), scheme, 100, b);
  CHECK(x.snapshots.back().positions == y.snapshots.back().positions);
  CHECK(x.snapshots.back().states == y.snapshots.back().states);
}

TEST_CASE("well-mixed reduction matches a Gillespie chain") {
  const std::size_t n = 50, i0 = 5, reps = 500;
  const double beta = 1.0, gamma = 0.5;
  const std::vector<double> times{0.5, 1.0, 2.0, 4.0};
  for (JumpMode mode : {JumpMode::split_step, JumpMode::thinning}) {
    SimScheme scheme = SimScheme::uniform(0.01, 4.0);
    scheme.snapshot_times = times;
    scheme.mode = mode;
    const ModelConfig m = well_mixed(beta, gamma);
    std::vector<std::vector<double>> sim(times.size()), ref(times.size());
    for (std::size_t r = 0; r < reps; ++r) {
      RngStream rng = derive_stream(10, "particles", r);
      ParticleSimulator ps(m, scheme);
      const Trajectory tr = ps.run(at_origin(n, i0), rng);
      for (std::size_t t = 0; t < times.size(); ++t) {
        sim[t].push_back(static_cast<double>(tr.snapshots[t].counts()[1]));
      }
    }
    for (std::size_t r = 0; r < 4 * reps; ++r) {
      RngStream rng = derive_stream(10, "gillespie", r);
      const auto path = gillespie_infected(n, i0, beta, gamma, times, rng);
      for (std::size_t t = 0; t < times.size(); ++t) ref[t].push_back(path[t]);
    }
    for (std::size_t t = 0; t < times.size(); ++t) {
      const Summary a = summarize(sim[t]), b = summarize(ref[t]);
      CAPTURE(times[t]);
      CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.se, b.se));
    }
  }
}

TEST_CASE("split-step and thinning agree in law for small steps") {
  const double beta = 1.5, gamma = 0.5;
  const ModelConfig m = well_mixed(beta, gamma);
  const std::size_t n = 100, reps = 400;
  SimScheme scheme = SimScheme::uniform(5e-4, 1.0);  // dt (beta + gamma) = 1e-3
  std::vector<std::vector<double>> counts(2, std::vector<double>(n + 1, 0.0));
  for (int mode = 0; mode < 2; ++mode) {
    scheme.mode = mode == 0 ? JumpMode::split_step : JumpMode::thinning;
    for (std::size_t r = 0; r < reps; ++r) {
      RngStream rng = derive_stream(11, mode == 0 ? "split" : "thin", r);
      ParticleSimulator ps(m, scheme);
      const Trajectory tr = ps.run(at_origin(n, 10), rng);
      counts[static_cast<std::size_t>(mode)][tr.snapshots.back().counts()[0]] += 1.0;
    }
  }
  // Merge sparse categories so every pooled bin holds at least 20 runs.
  std::vector<std::vector<double>> binned(2);
  double a = 0, b = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    a += counts[0][k];
    b += counts[1][k];
    if (a + b >= 20 || k == n) {
      binned[0].push_back(a);
      binned[1].push_back(b);
      a = b = 0;
    }
  }
  const TestVerdict v = chi_square_homogeneity(binned);
  CAPTURE(v.statistic);
  CHECK(v.p_value > 0.01);
}

TEST_CASE("fourth moments stay bounded as N doubles") {
  const ModelConfig m = reference_model();
  const SimScheme scheme = SimScheme::uniform(0.025, 2.0, 8);
  std::vector<double> sup_moment;
  for (std::size_t n : {500u, 1000u}) {
    std::vector<double> moment(scheme.snapshot_times.size(), 0.0);
    const std::size_t reps = 40;
    for (std::size_t r = 0; r < reps; ++r) {
      RngStream rng = derive_stream(12, "moments", r);
      const Trajectory tr = run(m, scheme, n, rng);
      for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
        for (double x : tr.snapshots[s].positions) {
          moment[s] += std::pow(x, 4) / static_cast<double>(n * reps);
        }
      }
    }
    sup_moment.push_back(*std::max_element(moment.begin(), moment.end()));
  }
  CHECK(std::isfinite(sup_moment[0]));
  CHECK(sup_moment[1] == doctest::Approx(sup_moment[0]).epsilon(0.10));
}

}
