// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mfsir/fluctuation.hpp"
#include "mfsir/grid.hpp"
#include "mfsir/meanfield.hpp"
#include "mfsir/model.hpp"
#include "mfsir/rng.hpp"
#include "mfsir/test_functions.hpp"

namespace mfsir {

/// Cell-integrated white-noise increments, each N(0, dt * h):
///   motion[e]  one independent field per channel on faces 0..G (the two
///              boundary faces are always zero),
///   infection  per cell (couples S and I),
///   recovery   per cell (couples I and R).
struct NoiseStep {
  std::array<std::vector<double>, 3> motion;
  std::vector<double> infection;
  std::vector<double> recovery;
};

struct NoiseField {
  Grid1D grid;
  double dt = 0.0;
  std::vector<NoiseStep> steps;
};

/// Draw order: motion S, I, R (interior faces ascending), then infection and
/// recovery (cells ascending).
NoiseStep sample_noise_step(const Grid1D& grid, double dt, RngStream& rng);
NoiseField sample_noise(const Grid1D& grid, double dt, std::size_t steps, RngStream& rng);

/// Gaussian eta_0 with Cov(eta_{e,c}, eta_{f,c'}) = delta p_{e,c} - p_{e,c} p_{f,c'},
/// drawn as sqrt(p) z - p sum(sqrt(p) z); z is channel-major, cells ascending.
ChannelMasses sample_eta0(const ChannelMasses& p, RngStream& rng);

/// Cell-wise increment of (M^S, M^I, M^R) for one step at masses mu:
///   motion:    -(G_{c+1} - G_c) with G_f = sigma_e(x_f) sqrt(rho^e_f) xi_f / h
///   infection: -/+ sqrt(rho^S K_{mu^I}) xi_2 on S / I
///   recovery:  -/+ sqrt(gamma rho^I) xi_3 on I / R
/// where rho = mass / h (face values average the two neighbours). Densities
/// below 1e-14 contribute no noise.
class MartingaleBuilder {
 public:
  MartingaleBuilder(const ModelConfig& config, const Grid1D& grid);
  void increment(const NoiseStep& noise, const ChannelMasses& mu, const std::vector<double>& k_mu,
                 ChannelMasses& dm) const;
  void increment(const NoiseStep& noise, const ChannelMasses& mu, ChannelMasses& dm) const;

 private:
  ModelConfig config_;
  Grid1D grid_;
  PdeOperator op_;
  std::array<std::vector<double>, 3> face_sigma_;
};

/// (Delta M^S(phi), Delta M^I(phi), Delta M^R(phi)) for one noise step.
std::array<double, 3> build_martingale_increment(const NoiseStep& noise, const ChannelMasses& mu,
                                                 const TestFunction& phi,
                                                 const ModelConfig& config, const Grid1D& grid);

/// Limit covariance Cov(M_t(Phi1), M_s(Phi2)) on the product space:
///   int_0^{t^s} sum_e <mu^e, s_e^2 grad phi1^e . grad phi2^e>
///     + <mu^S, K_{mu^I} (phi1^I - phi1^S)(phi2^I - phi2^S)>
///     + <mu^I, gamma (phi1^R - phi1^I)(phi2^R - phi2^I)> dr
/// by the trapezoid rule over the stored times.
double covariance_quadrature(const StateTestFunction& phi1, const StateTestFunction& phi2,
                             double t, double s, const DensityTrajectory& mu,
                             const ModelConfig& config);

/// Cell-integrated eta^S, eta^I, eta^R at stored times.
struct FluctuationField {
  Grid1D grid;
  std::vector<double> times;
  std::vector<ChannelMasses> eta;

  double pairing(std::size_t k, const StateTestFunction& phi) const;
  double pairing(std::size_t k, const TestFunction& phi, EpidemicState e) const;
  double total(std::size_t k) const;
};

/// Explicit Euler-Maruyama for the linearized fluctuation system around mu.
/// `mu` must be stored at every solver step; its step is the SPDE step.
/// Nonlocal fields of mu are precomputed once and shared by all solves.
class LinearSpde {
 public:
  LinearSpde(const ModelConfig& config, const DensityTrajectory& mu);

  double dt() const { return dt_; }
  std::size_t steps() const { return mu_->size() - 1; }
  const Grid1D& grid() const { return mu_->grid; }

  /// noise == nullptr solves the homogeneous system; otherwise noise must
  /// cover steps() steps. Fields are stored at the given step indices.
  FluctuationField solve(const ChannelMasses& eta0, const NoiseField* noise,
                         const std::vector<std::size_t>& store_steps) const;
  /// As above with noise drawn step by step from rng.
  FluctuationField solve(const ChannelMasses& eta0, RngStream& rng,
                         const std::vector<std::size_t>& store_steps) const;

  std::size_t step_of(double t) const;

 private:
  template <class NoiseAt>
  FluctuationField run(const ChannelMasses& eta0, NoiseAt&& noise_at,
                       const std::vector<std::size_t>& store_steps) const;

  ModelConfig config_;
  const DensityTrajectory* mu_;
  double dt_ = 0.0;
  PdeOperator op_;
  MartingaleBuilder builder_;
  std::vector<ChannelMasses> v_mu_;
  std::vector<std::vector<double>> k_mu_;
};

/// One solve over [0, T] with step dt (both must match mu), stored every step.
FluctuationField solve_linear_spde(const DensityTrajectory& mu, const ChannelMasses& eta0,
                                   const NoiseField* noise, double T, double dt,
                                   const ModelConfig& config);

struct SpdeOptions {
  std::size_t reps = 500;
  std::vector<double> checkpoints;  // stored times of mu
  std::vector<TestFunction> bank;   // empty: standard_bank()
  std::uint64_t seed = 1;
  std::string tag = "spde";
  int workers = 0;
};

/// Replicated SPDE paths from sampled eta_0 and noise; returns eta
/// projections in the CltResult layout (martingale and qv left empty).
CltResult spde_experiment(const ModelConfig& config, const DensityTrajectory& mu,
                          const SpdeOptions& options);

struct LimitMartingaleOptions {
  std::size_t paths = 10000;
  std::vector<double> times;  // stored times of mu
  std::uint64_t seed = 1;
  std::string tag = "noise";
  int workers = 0;
};

/// Monte Carlo paths of the limit martingales M_t(Phi_j) from the white-noise
/// construction. Result [path][j * times.size() + t].
std::vector<std::vector<double>> limit_martingale_samples(
    const ModelConfig& config, const DensityTrajectory& mu,
    const std::vector<StateTestFunction>& functions, const LimitMartingaleOptions& options);

/// Two-sample comparison of particle and SPDE eta projections.
struct CompareRow {
  EpidemicState state = EpidemicState::S;
  std::size_t k = 0;
  std::size_t c = 0;
  TestVerdict ks;
  double var_particle = 0.0;
  double var_spde = 0.0;
  double ratio = 0.0;
  bool pass = false;  // KS not rejected at alpha and ratio within [lo, hi]
};

/// Both results must share bank and checkpoints.
std::vector<CompareRow> compare_projections(const CltResult& particle, const CltResult& spde,
                                            const std::vector<EpidemicState>& states,
                                            double alpha = 0.01, double lo = 0.8,
                                            double hi = 1.25);

/// A (Phi1, Phi2, t, s) covariance check; degenerate tuples have disjoint
/// supports and a zero limit covariance.
struct CovTuple {
  std::string name;
  StateTestFunction phi1;
  StateTestFunction phi2;
  double t = 0.0;
  double s = 0.0;
  bool degenerate = false;
};

/// Five strongly correlated tuples and two disjoint-support tuples on
/// [0, T] (T >= 1 recommended; times are fractions of T).
std::vector<CovTuple> standard_covariance_tuples(double T);

struct CovRow {
  std::string name;
  bool degenerate = false;
  double t = 0.0;
  double s = 0.0;
  CovEstimate mc;
  double quadrature = 0.0;
  double rel_error = 0.0;
  double abs_error = 0.0;
  bool pass = false;  // rel_error <= rel_tol, or abs_error <= abs_tol if degenerate
};

/// Monte Carlo covariance from limit_martingale_samples against
/// covariance_quadrature for each tuple.
std::vector<CovRow> covariance_check(const ModelConfig& config, const DensityTrajectory& mu,
                                     const std::vector<CovTuple>& tuples,
                                     const LimitMartingaleOptions& options, double rel_tol = 0.05,
                                     double abs_tol = 1e-3);

}  // namespace mfsir
