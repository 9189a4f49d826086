// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mfsir/grid.hpp"
#include "mfsir/model.hpp"
#include "mfsir/particle_sim.hpp"
#include "mfsir/test_functions.hpp"

namespace mfsir {

/// Cell masses (density * h) for the three channels.
using ChannelMasses = std::array<std::vector<double>, 3>;

/// Time-indexed S/I/R cell masses on a 1-D grid.
struct DensityTrajectory {
  Grid1D grid;
  std::vector<double> times;
  std::vector<ChannelMasses> mass;

  double dt = 0.0;                 // internal step of the solver
  double initial_tail_mass = 0.0;  // initial-law mass outside the domain
  double clipped_mass = 0.0;       // total negative mass removed by clipping
  double max_clip_per_step = 0.0;
  double min_cell_before_clip = 0.0;
  double max_mass_error = 0.0;     // max |total mass - initial total| over stored times

  std::size_t size() const { return times.size(); }
  /// Masses at time t, linear in time between stored entries.
  ChannelMasses at(double t) const;
  double channel_mass(std::size_t k, EpidemicState e) const;
  /// Index of the stored time equal to t (to 1e-9); throws otherwise.
  std::size_t index_of(double t) const;
};

/// The discrete spatial operator of the limit PDE on a grid:
///   d/dt m^e = -div(flux) + reactions,
/// with face fluxes  v_f^+ m_{f-1}/h + v_f^- m_f/h - (s2_f m_f - s2_{f-1} m_{f-1}) / (2h^2)
/// (upwind transport, central diffusion, zero flux at the two ends) and the
/// nonlocal fields evaluated by direct lag sums.
class PdeOperator {
 public:
  PdeOperator(const ModelConfig& config, const Grid1D& grid);

  /// v[e][f] = V^e_mu at interior face f (index 1..G-1; entries 0 and G unused).
  void face_velocities(const ChannelMasses& m, ChannelMasses& v) const;
  /// K_{mu^I} at cell centers.
  void infection_field(const std::vector<double>& m_inf, std::vector<double>& k) const;

  /// Right-hand side of the nonlinear system.
  void rhs(const ChannelMasses& m, ChannelMasses& dm) const;

  /// Right-hand side of the linearization at mu applied to eta. `v_mu` and
  /// `k_mu` are the nonlocal fields of mu (from face_velocities and
  /// infection_field); the upwind direction is frozen at the sign of v_mu.
  void linear_rhs(const ChannelMasses& mu, const ChannelMasses& v_mu,
                  const std::vector<double>& k_mu, const ChannelMasses& eta,
                  ChannelMasses& deta) const;

  /// Largest stable explicit step (0.4 h^2 / sigma^2 and 0.4 h / |V|).
  double stable_dt() const;

  const Grid1D& grid() const { return grid_; }
  /// sigma_e^2 at cell centers.
  const std::vector<double>& sigma2(EpidemicState e) const { return s2_[code(e)]; }

 private:
  void transport(const std::vector<double>& m, const std::vector<double>& v_up,
                 const std::vector<double>& carried, const std::vector<double>& v_carry,
                 const std::vector<double>& s2, std::vector<double>& dm) const;

  ModelConfig config_;
  Grid1D grid_;
  int g_ = 0;
  double h_ = 0.0;
  std::vector<double> drift_lag_;   // radial drift profile at center - face offsets
  std::vector<double> kernel_lag_;  // kernel at center - center offsets
  std::array<std::vector<double>, 3> s2_;
};

/// Largest stable explicit step for solve_pde on this grid.
double pde_stable_dt(const ModelConfig& config, const Grid1D& grid);

/// Explicit finite-volume solve of the limit PDE on [0, T]. The step is
/// shrunk to divide T (and store_dt); results are stored every store_dt
/// (every step when store_dt == 0).
DensityTrajectory solve_pde(const ModelConfig& config, const Grid1D& grid, double T, double dt,
                            double store_dt = 0.0);

/// Exact initial cell masses (Gaussian-mixture CDF differences).
ChannelMasses initial_cell_masses(const InitialLawSpec& law, const Grid1D& grid,
                                  double* tail_mass = nullptr);

/// <mu^e_t, phi> by midpoint quadrature, linear in t between stored times.
double pair_density(const DensityTrajectory& traj, double t, const TestFunction& phi,
                    EpidemicState e);
double pair_masses(const Grid1D& grid, const std::vector<double>& m, const TestFunction& phi);

/// Large-N particle surrogate for mu_t (used when d >= 2).
Trajectory reference_ensemble(const ModelConfig& config, std::size_t n_ref, std::uint64_t seed,
                              const SimScheme& scheme);

}  // namespace mfsir
