// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfsir/model.hpp"
#include "mfsir/pair_sums.hpp"
#include "mfsir/rng.hpp"

namespace mfsir {

enum class JumpMode { split_step, thinning };

struct SimScheme {
  JumpMode mode = JumpMode::split_step;
  double dt = 0.01;
  /// Sorted, each a multiple of dt; the last entry is the final time.
  std::vector<double> snapshot_times{1.0};
  /// Keep Brownian increments, rates and compensators for martingale work.
  bool record_log = false;
  /// Cell-list traversal for compactly supported kernels.
  bool cell_list = false;

  static SimScheme uniform(double dt, double final_time, std::size_t intervals = 1);

  double final_time() const { return snapshot_times.back(); }
  std::size_t steps() const;
  /// Step index k with k * dt == snapshot_times[s].
  std::vector<std::size_t> snapshot_steps() const;
  void validate() const;
};

struct JumpRecord {
  double time = 0.0;
  std::uint32_t individual = 0;
  EpidemicState from = EpidemicState::S;
  EpidemicState to = EpidemicState::I;
  double rate = 0.0;  // rate at the jump decision
};

/// Everything needed to rebuild the martingales of one run. Per-step arrays
/// are flat: step k, individual i, coordinate c sits at (k * n + i) * dim + c.
struct EventLog {
  int dim = 1;
  std::size_t n = 0;
  double dt = 0.0;
  std::size_t steps = 0;

  std::vector<double> positions;          // (steps + 1) x n x dim, start of step
  std::vector<EpidemicState> states;      // (steps + 1) x n
  std::vector<double> brownian;           // steps x n x dim, B(t + dt) - B(t)
  std::vector<double> rates;              // steps x n, jump rate at step start
  std::vector<double> compensator;        // steps x n, compensator increment
  std::vector<double> hazard;             // n, cumulative sum of rate * dt
  std::vector<JumpRecord> jumps;
  std::vector<double> jump_positions;     // jumps x dim

  bool empty() const { return steps == 0 || brownian.empty(); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  Point position(std::size_t k, std::size_t i) const {
    return {positions.data() + (k * n + i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  EpidemicState state(std::size_t k, std::size_t i) const { return states[k * n + i]; }
  /// Ensemble at the start of step k (k == steps gives the final state).
  ParticleEnsemble ensemble(std::size_t k) const;
};

struct Trajectory {
  ModelConfig config;
  SimScheme scheme;
  std::vector<ParticleEnsemble> snapshots;
  EventLog log;
  std::uint64_t stream_key = 0;
  std::uint64_t stream_id = 0;
};

/// (1/N) sum_{j != i} K(x_i, x_j) 1{e_j = I}; zero unless i is susceptible.
double infection_rate(std::size_t i, const ParticleEnsemble& ensemble, const KernelSpec& kernel);

/// Three clouds (S, I, R), each atom with weight 1/N.
StateClouds empirical_measure(const ParticleEnsemble& ensemble);

/// Stepper with reusable workspace. Not thread-safe; use one per worker.
class ParticleSimulator {
 public:
  ParticleSimulator(const ModelConfig& config, const SimScheme& scheme);

  /// Advance by one dt. When `log` is non-null the step is appended to it.
  void step(ParticleEnsemble& ensemble, RngStream& rng, EventLog* log = nullptr);
  Trajectory run(std::size_t n, RngStream& rng);
  Trajectory run(ParticleEnsemble initial, RngStream& rng);

  const ModelConfig& config() const { return config_; }
  const SimScheme& scheme() const { return scheme_; }

 private:
  void step_split(ParticleEnsemble& ens, RngStream& rng, EventLog* log);
  void step_thinning(ParticleEnsemble& ens, RngStream& rng, EventLog* log);
  void start_rates(const ParticleEnsemble& ens);
  void check_finite(const ParticleEnsemble& ens) const;

  ModelConfig config_;
  SimScheme scheme_;
  PairSums sums_;
  std::size_t step_index_ = 0;
  std::vector<double> drift_;
  std::vector<double> rate_;
  std::vector<double> start_;
  std::vector<double> db_;
};

void step(ParticleEnsemble& ensemble, const ModelConfig& config, const SimScheme& scheme,
          RngStream& rng, EventLog* log = nullptr);
Trajectory run(const ModelConfig& config, const SimScheme& scheme, std::size_t n,
               RngStream& rng);

}  // namespace mfsir
