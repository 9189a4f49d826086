// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mfsir/meanfield.hpp"
#include "mfsir/model.hpp"
#include "mfsir/particle_sim.hpp"
#include "mfsir/stats.hpp"
#include "mfsir/test_functions.hpp"

namespace mfsir {

/// sqrt(N) (<mu^{e,N}, phi> - <mu^e_t, phi>) for the channel-e individuals of
/// the ensemble against the limit at time t.
double eta_projection(const ParticleEnsemble& ensemble, const DensityTrajectory& limit, double t,
                      const TestFunction& phi, EpidemicState e);
/// Product-space version: sqrt(N) <mu^N_t - mu_t, Phi>.
double eta_projection(const ParticleEnsemble& ensemble, const DensityTrajectory& limit, double t,
                      const StateTestFunction& phi);

/// One path per channel, sampled at t_k = k dt for k = 0..steps.
using ChannelPaths = std::array<std::vector<double>, 3>;

/// Rescaled martingales M~^{e,N}(phi), e = S, I, R, rebuilt from the log:
/// Brownian integrals of grad(phi) sigma on the channel, plus channel jumps,
/// minus their logged compensators, all divided by sqrt(N).
ChannelPaths martingale_channels(const EventLog& log, const ModelConfig& config,
                                 const TestFunction& phi);
std::vector<double> assemble_martingale(const EventLog& log, const ModelConfig& config,
                                        const TestFunction& phi, EpidemicState e);
/// M~^N(Phi) on the product space (sum of the channel martingales).
std::vector<double> assemble_martingale(const EventLog& log, const ModelConfig& config,
                                        const StateTestFunction& phi);

/// Formula quadratic variations by left-endpoint sums over the logged steps:
///   S: int <mu^S, |grad phi|^2 s_S^2> + <mu^S, phi^2 K_{mu^I}>
///   I: int <mu^I, |grad phi|^2 s_I^2> + <mu^S, phi^2 K_{mu^I}> + <mu^I, gamma phi^2>
///   R: int <mu^R, |grad phi|^2 s_R^2> + <mu^I, gamma phi^2>
ChannelPaths qv_channels(const EventLog& log, const ModelConfig& config, const TestFunction& phi);
std::vector<double> qv_formula(const EventLog& log, const ModelConfig& config,
                               const TestFunction& phi, EpidemicState e);
/// Product-space QV: int sum_e <mu^e, |grad phi^e|^2 s_e^2>
///   + <mu^S, K_{mu^I} (phi^I - phi^S)^2> + <mu^I, gamma (phi^R - phi^I)^2>.
std::vector<double> qv_formula(const EventLog& log, const ModelConfig& config,
                               const StateTestFunction& phi);

/// sqrt(N) (<mu^N_t, Phi> - <mu^N_0, Phi> - sum_k dt <mu^N_k, L_{mu^N_k} Phi>) - M~_t(Phi)
/// at every logged step, where L_mu is the generator with frozen measure mu.
/// The limit-side terms of the fluctuation equation cancel identically and
/// are not evaluated.
std::vector<double> semimartingale_residual(const EventLog& log, const ModelConfig& config,
                                            const StateTestFunction& phi);

struct LlnOptions {
  std::vector<std::size_t> ns;
  std::size_t reps = 200;
  double final_time = 2.0;
  SimScheme scheme;  // dt, mode and cell_list are used; snapshots are set to {T}
  int grid_cells = 512;
  std::size_t n_ref = 100000;  // d >= 2
  int n_proj = 128;            // d >= 2
  std::uint64_t seed = 1;
  int workers = 0;
};

struct LlnResult {
  RateTable table;
  FitResult fit;
  std::vector<std::vector<double>> samples;  // [row][rep]
  std::array<double, 3> limit_mass{};
  std::string limit_kind;  // "pde" or "reference_ensemble"
};

/// W1(mu^N_T, mu_T) summed over channels: channel-wise distance of the
/// renormalized measures plus |m^e_N - m^e|.
double lln_distance(const ParticleEnsemble& ensemble, const DensityTrajectory& limit);

/// Rate sweep against the PDE limit (d = 1) or a reference ensemble with
/// sliced W1 (d >= 2).
LlnResult lln_experiment(const ModelConfig& config, const LlnOptions& options);

struct CltOptions {
  std::size_t n = 1000;
  std::size_t reps = 500;
  SimScheme scheme;                 // dt, mode; snapshots are set to the checkpoints
  std::vector<double> checkpoints;  // empty: {0, T/4, T/2, 3T/4, T}
  double final_time = 2.0;
  std::vector<TestFunction> bank;   // empty: standard_bank()
  bool martingales = true;          // rebuild M~ and formula QV from the log
  std::uint64_t seed = 1;
  std::string tag = "clt";
  int workers = 0;
};

/// Per replication, values indexed [(state * K + k) * C + c] for K bank
/// functions and C checkpoints.
struct FluctuationSample {
  std::size_t rep = 0;
  std::vector<double> eta;
  std::vector<double> martingale;
  std::vector<double> qv;
};

struct CltResult {
  std::vector<double> checkpoints;
  std::vector<TestFunction> bank;
  std::vector<FluctuationSample> samples;

  std::size_t index(EpidemicState e, std::size_t k, std::size_t c) const {
    return (static_cast<std::size_t>(code(e)) * bank.size() + k) * checkpoints.size() + c;
  }
  /// Values over replications of one (field, state, function, checkpoint).
  std::vector<double> column(const std::vector<double> FluctuationSample::*field,
                             EpidemicState e, std::size_t k, std::size_t c) const;
};

/// Replicated particle runs with eta projections against `limit` (may be
/// null, then eta is NaN) and, optionally, martingale and QV paths.
CltResult clt_experiment(const ModelConfig& config, const DensityTrajectory* limit,
                         const CltOptions& options);

/// Ito-isometry check at one checkpoint for every (state, function):
/// E[M~_t^2] against E[formula QV_t].
struct QvRow {
  EpidemicState state = EpidemicState::S;
  std::size_t k = 0;
  double mean_m = 0.0;   // mean of M~_t
  double se_m = 0.0;
  double mean_m2 = 0.0;  // mean of M~_t^2
  double mean_qv = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;  // Monte Carlo SE of mean_m2 / mean_qv
  bool checked = false;   // mean_qv >= qv_floor
  bool pass = true;       // ratio within [lo, hi] when checked
  bool mean_zero = true;  // |mean_m| <= 3 se_m
};

std::vector<QvRow> qv_table(const CltResult& result, std::size_t checkpoint, double lo = 0.9,
                            double hi = 1.1, double qv_floor = 1e-3);

}  // namespace mfsir
