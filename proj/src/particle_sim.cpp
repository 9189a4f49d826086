// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "mfsir/error.hpp"

namespace mfsir {
namespace {

constexpr double kGridTol = 1e-9;

std::size_t grid_index(double t, double dt) {
  return static_cast<std::size_t>(std::llround(t / dt));
}

}  // namespace

SimScheme SimScheme::uniform(double dt, double final_time, std::size_t intervals) {
  SimScheme s;
  s.dt = dt;
  s.snapshot_times.clear();
  for (std::size_t k = 0; k <= intervals; ++k) {
    s.snapshot_times.push_back(final_time * static_cast<double>(k) /
                               static_cast<double>(intervals));
  }
  return s;
}

std::size_t SimScheme::steps() const { return grid_index(final_time(), dt); }

std::vector<std::size_t> SimScheme::snapshot_steps() const {
  std::vector<std::size_t> out;
  out.reserve(snapshot_times.size());
  for (double t : snapshot_times) out.push_back(grid_index(t, dt));
  return out;
}

void SimScheme::validate() const {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ConfigError("simulation.dt", "must be > 0");
  if (snapshot_times.empty()) throw ConfigError("simulation.snapshots", "must not be empty");
  double prev = -1.0;
  for (double t : snapshot_times) {
    if (!(std::isfinite(t) && t >= 0.0) || t <= prev) {
      throw ConfigError("simulation.snapshots", "must be finite, >= 0 and strictly increasing");
    }
    const double k = std::round(t / dt);
    if (std::abs(k * dt - t) > kGridTol * std::max(1.0, t)) {
      throw ConfigError("simulation.snapshots",
                        "time " + std::to_string(t) + " is not a multiple of dt");
    }
    prev = t;
  }
}

ParticleEnsemble EventLog::ensemble(std::size_t k) const {
  ParticleEnsemble e(dim, n);
  const auto nd = n * static_cast<std::size_t>(dim);
  std::copy_n(positions.begin() + static_cast<std::ptrdiff_t>(k * nd), nd, e.positions.begin());
  std::copy_n(states.begin() + static_cast<std::ptrdiff_t>(k * n), n, e.states.begin());
  e.time = time(k);
  return e;
}

double infection_rate(std::size_t i, const ParticleEnsemble& ensemble, const KernelSpec& kernel) {
  if (i >= ensemble.size()) {
    throw UsageError("infection_rate: index " + std::to_string(i) + " out of range");
  }
  if (ensemble.states[i] != EpidemicState::S) return 0.0;
  const Point xi = ensemble.position(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    if (j == i || ensemble.states[j] != EpidemicState::I) continue;
    acc += kernel(xi, ensemble.position(j));
  }
  return acc / static_cast<double>(ensemble.size());
}

StateClouds empirical_measure(const ParticleEnsemble& ensemble) {
  return split_by_state(marked_cloud(ensemble));
}

ParticleSimulator::ParticleSimulator(const ModelConfig& config, const SimScheme& scheme)
    : config_(config), scheme_(scheme) {
  config_.validate();
  scheme_.validate();
}

void ParticleSimulator::start_rates(const ParticleEnsemble& ens) {
  const std::size_t n = ens.size();
  rate_.resize(n);
  sums_.infection(config_.kernel, ens, rate_, scheme_.cell_list);
  for (std::size_t i = 0; i < n; ++i) {
    if (ens.states[i] == EpidemicState::I) rate_[i] = config_.gamma;
  }
}

void ParticleSimulator::check_finite(const ParticleEnsemble& ens) const {
  for (std::size_t i = 0; i < ens.size(); ++i) {
    for (double v : ens.position(i)) {
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite position for individual " + std::to_string(i) +
                             " at step " + std::to_string(step_index_));
      }
    }
  }
}

void ParticleSimulator::step(ParticleEnsemble& ens, RngStream& rng, EventLog* log) {
  if (ens.dim != config_.dim) throw UsageError("step: ensemble dimension differs from config");
  step_index_ = grid_index(ens.time, scheme_.dt);
  if (log != nullptr && log->positions.empty()) {
    log->dim = ens.dim;
    log->n = ens.size();
    log->dt = scheme_.dt;
    log->steps = 0;
    log->positions = ens.positions;
    log->states = ens.states;
    log->hazard.assign(ens.size(), 0.0);
  }
  if (scheme_.mode == JumpMode::split_step) {
    step_split(ens, rng, log);
  } else {
    step_thinning(ens, rng, log);
  }
  ens.time = static_cast<double>(step_index_ + 1) * scheme_.dt;
  check_finite(ens);
  if (log != nullptr) {
    log->positions.insert(log->positions.end(), ens.positions.begin(), ens.positions.end());
    log->states.insert(log->states.end(), ens.states.begin(), ens.states.end());
    ++log->steps;
  }
}

void ParticleSimulator::step_split(ParticleEnsemble& ens, RngStream& rng, EventLog* log) {
  const std::size_t n = ens.size();
  const int d = ens.dim;
  const double dt = scheme_.dt;
  const double sqdt = std::sqrt(dt);
  const double t0 = static_cast<double>(step_index_) * dt;
  drift_.resize(n * static_cast<std::size_t>(d));
  sums_.drift(config_.drift, ens, drift_);
  start_rates(ens);
  const double p_recover = -std::expm1(-config_.gamma * dt);
  const bool const_sigma = config_.diffusion.is_constant();
  const std::size_t base = log != nullptr ? log->brownian.size() : 0;
  if (log != nullptr) {
    log->brownian.resize(base + n * static_cast<std::size_t>(d));
    log->rates.insert(log->rates.end(), rate_.begin(), rate_.end());
    log->compensator.resize(log->compensator.size() + n);
  }
  const std::size_t cbase = log != nullptr ? log->compensator.size() - n : 0;

  std::vector<double>& xs = start_;
  xs.resize(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto x = ens.position(i);
    const EpidemicState e = ens.states[i];
    std::copy(x.begin(), x.end(), xs.begin());
    const double sig = const_sigma ? config_.diffusion.base[code(e)]
                                   : config_.diffusion.sigma(Point(xs), e);
    for (int k = 0; k < d; ++k) {
      const double db = sqdt * rng.normal();
      x[k] += drift_[i * d + k] * dt + sig * db;
      if (log != nullptr) log->brownian[base + i * d + k] = db;
    }
    const double u = rng.uniform();
    double p = 0.0;
    if (e == EpidemicState::S) {
      p = -std::expm1(-rate_[i] * dt);
    } else if (e == EpidemicState::I) {
      p = p_recover;
    }
    if (log != nullptr) {
      log->compensator[cbase + i] = p;
      log->hazard[i] += rate_[i] * dt;
    }
    if (u < p) {
      const EpidemicState to = e == EpidemicState::S ? EpidemicState::I : EpidemicState::R;
      ens.states[i] = to;
      if (log != nullptr) {
        log->jumps.push_back({t0, static_cast<std::uint32_t>(i), e, to, rate_[i]});
        log->jump_positions.insert(log->jump_positions.end(), xs.begin(), xs.end());
      }
    }
  }
}

void ParticleSimulator::step_thinning(ParticleEnsemble& ens, RngStream& rng, EventLog* log) {
  const std::size_t n = ens.size();
  const int d = ens.dim;
  const auto nd = n * static_cast<std::size_t>(d);
  const double dt = scheme_.dt;
  const double sqdt = std::sqrt(dt);
  const double t0 = static_cast<double>(step_index_) * dt;
  drift_.resize(nd);
  sums_.drift(config_.drift, ens, drift_);
  start_rates(ens);

  start_ = ens.positions;
  db_.resize(nd);
  const bool const_sigma = config_.diffusion.is_constant();
  for (std::size_t i = 0; i < n; ++i) {
    const EpidemicState e = ens.states[i];
    const double sig = const_sigma ? config_.diffusion.base[code(e)]
                                   : config_.diffusion.sigma(ens.position(i), e);
    for (int k = 0; k < d; ++k) {
      db_[i * d + k] = sqdt * rng.normal();
      ens.positions[i * d + k] += drift_[i * d + k] * dt + sig * db_[i * d + k];
    }
  }

  const double bound = config_.kernel.bound() + config_.gamma;
  std::vector<std::tuple<double, std::size_t>> cand;
  if (bound > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double t = 0.0;
      while (true) {
        t += rng.exponential(bound);
        if (t >= dt) break;
        cand.emplace_back(t, i);
      }
    }
  }
  std::sort(cand.begin(), cand.end());

  // Left-limit states; positions linearly interpolated along the Euler step.
  std::vector<EpidemicState> cur = ens.states;
  std::vector<double> xi(static_cast<std::size_t>(d));
  std::vector<double> xj(static_cast<std::size_t>(d));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (const auto& [t, i] : cand) {
    const double u = rng.uniform();
    const EpidemicState e = cur[i];
    if (e == EpidemicState::R) continue;
    const double w = t / dt;
    for (int k = 0; k < d; ++k) {
      xi[k] = start_[i * d + k] + w * (ens.positions[i * d + k] - start_[i * d + k]);
    }
    double rate = config_.gamma;
    if (e == EpidemicState::S) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || cur[j] != EpidemicState::I) continue;
        for (int k = 0; k < d; ++k) {
          xj[k] = start_[j * d + k] + w * (ens.positions[j * d + k] - start_[j * d + k]);
        }
        acc += config_.kernel(Point(xi), Point(xj));
      }
      rate = acc * inv_n;
    }
    if (u * bound < rate) {
      const EpidemicState to = e == EpidemicState::S ? EpidemicState::I : EpidemicState::R;
      cur[i] = to;
      if (log != nullptr) {
        log->jumps.push_back({t0 + t, static_cast<std::uint32_t>(i), e, to, rate});
        log->jump_positions.insert(log->jump_positions.end(), xi.begin(), xi.end());
      }
    }
  }
  ens.states = std::move(cur);

  if (log != nullptr) {
    log->brownian.insert(log->brownian.end(), db_.begin(), db_.end());
    log->rates.insert(log->rates.end(), rate_.begin(), rate_.end());
    for (std::size_t i = 0; i < n; ++i) {
      log->compensator.push_back(rate_[i] * dt);
      log->hazard[i] += rate_[i] * dt;
    }
  }
}

Trajectory ParticleSimulator::run(std::size_t n, RngStream& rng) {
  return run(sample_initial(config_.initial, config_.dim, n, rng), rng);
}

Trajectory ParticleSimulator::run(ParticleEnsemble ens, RngStream& rng) {
  Trajectory traj;
  traj.config = config_;
  traj.scheme = scheme_;
  traj.stream_key = rng.key();
  traj.stream_id = rng.stream_id();
  const std::vector<std::size_t> snaps = scheme_.snapshot_steps();
  const std::size_t steps = scheme_.steps();
  EventLog* log = scheme_.record_log ? &traj.log : nullptr;
  ens.time = 0.0;
  if (log != nullptr) {
    log->dim = ens.dim;
    log->n = ens.size();
    log->dt = scheme_.dt;
    log->positions.reserve((steps + 1) * ens.positions.size());
    log->states.reserve((steps + 1) * ens.size());
    log->brownian.reserve(steps * ens.positions.size());
    log->rates.reserve(steps * ens.size());
    log->compensator.reserve(steps * ens.size());
  }
  if (log != nullptr && steps == 0) {
    log->positions = ens.positions;
    log->states = ens.states;
    log->hazard.assign(ens.size(), 0.0);
  }
  std::size_t next = 0;
  for (std::size_t k = 0;; ++k) {
    while (next < snaps.size() && snaps[next] == k) {
      traj.snapshots.push_back(ens);
      ++next;
    }
    if (k == steps) break;
    step(ens, rng, log);
  }
  return traj;
}

void step(ParticleEnsemble& ensemble, const ModelConfig& config, const SimScheme& scheme,
          RngStream& rng, EventLog* log) {
  ParticleSimulator sim(config, scheme);
  sim.step(ensemble, rng, log);
}

Trajectory run(const ModelConfig& config, const SimScheme& scheme, std::size_t n,
               RngStream& rng) {
  ParticleSimulator sim(config, scheme);
  return sim.run(n, rng);
}

}  // namespace mfsir
