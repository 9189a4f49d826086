// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfsir/error.hpp"
#include "mfsir/pair_sums.hpp"

namespace mfsir {
namespace {

constexpr double kCfl = 0.4;
constexpr double kMassGuard = 1e-4;
constexpr double kTailGuard = 1e-6;

std::size_t steps_for(double span, double dt) {
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

}  // namespace

ChannelMasses DensityTrajectory::at(double t) const {
  if (times.empty()) throw UsageError("DensityTrajectory::at: empty trajectory");
  const double eps = 1e-12 * std::max(1.0, times.back());
  if (t < times.front() - eps || t > times.back() + eps) {
    throw UsageError("DensityTrajectory::at: t = " + std::to_string(t) + " outside [" +
                     std::to_string(times.front()) + ", " + std::to_string(times.back()) + "]");
  }
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return mass.front();
  if (it == times.end()) return mass.back();
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  if (w <= 1e-12) return mass[k];
  if (w >= 1.0 - 1e-12) return mass[k + 1];
  ChannelMasses out = mass[k];
  for (int e = 0; e < 3; ++e)
    for (std::size_t c = 0; c < out[e].size(); ++c)
      out[e][c] = (1.0 - w) * mass[k][e][c] + w * mass[k + 1][e][c];
  return out;
}

double DensityTrajectory::channel_mass(std::size_t k, EpidemicState e) const {
  double s = 0.0;
  for (double v : mass[k][code(e)]) s += v;
  return s;
}

std::size_t DensityTrajectory::index_of(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
  if (it == times.end() || std::abs(*it - t) > 1e-9) {
    throw UsageError("DensityTrajectory: no stored time at t = " + std::to_string(t));
  }
  return static_cast<std::size_t>(it - times.begin());
}

PdeOperator::PdeOperator(const ModelConfig& config, const Grid1D& grid)
    : config_(config), grid_(grid), g_(grid.cells), h_(grid.h()) {
  if (config.dim != 1) throw UsageError("PdeOperator: grid solvers are 1-D only");
  grid_.validate();
  const int g = g_;
  drift_lag_.assign(static_cast<std::size_t>(2 * g), 0.0);
  if (config.drift.family != DriftSpec::Family::zero) {
    for (int k = -g; k < g; ++k) {
      const double u = (k + 0.5) * h_;
      drift_lag_[static_cast<std::size_t>(k + g)] = config.drift.radial_factor(u * u) * u;
    }
  }
  kernel_lag_.assign(static_cast<std::size_t>(2 * g - 1), 0.0);
  for (int k = -(g - 1); k < g; ++k) {
    const double u = k * h_;
    kernel_lag_[static_cast<std::size_t>(k + g - 1)] = config.kernel.profile(u * u);
  }
  for (EpidemicState e : kStates) {
    auto& s2 = s2_[code(e)];
    s2.resize(static_cast<std::size_t>(g));
    for (int c = 0; c < g; ++c) {
      const double x = grid.center(c);
      const double s = config.diffusion.sigma(Point(&x, 1), e);
      s2[static_cast<std::size_t>(c)] = s * s;
    }
  }
}

void PdeOperator::face_velocities(const ChannelMasses& m, ChannelMasses& v) const {
  const auto g = static_cast<std::size_t>(g_);
  for (auto& ve : v) ve.assign(g + 1, 0.0);
  if (config_.drift.family == DriftSpec::Family::zero) return;
  const DriftSpec& d = config_.drift;
  std::vector<double> work(g);
  if (d.state_independent()) {
    const double w = d.weight(EpidemicState::S, EpidemicState::S);
    for (std::size_t c = 0; c < g; ++c) work[c] = w * (m[0][c] + m[1][c] + m[2][c]);
    lag_convolve(drift_lag_.data(), g_, work.data(), g, v[0].data(), g + 1);
    v[1] = v[0];
    v[2] = v[0];
  } else {
    for (EpidemicState e : kStates) {
      for (std::size_t c = 0; c < g; ++c) {
        work[c] = d.weight(e, EpidemicState::S) * m[0][c] +
                   d.weight(e, EpidemicState::I) * m[1][c] +
                   d.weight(e, EpidemicState::R) * m[2][c];
      }
      lag_convolve(drift_lag_.data(), g_, work.data(), g, v[code(e)].data(), g + 1);
    }
  }
  for (auto& ve : v) {
    ve[0] = 0.0;
    ve[g] = 0.0;
  }
}

void PdeOperator::infection_field(const std::vector<double>& m_inf, std::vector<double>& k) const {
  const auto g = static_cast<std::size_t>(g_);
  k.assign(g, 0.0);
  if (config_.kernel.beta == 0.0) return;
  lag_convolve(kernel_lag_.data(), g_ - 1, m_inf.data(), g, k.data(), g);
}

void PdeOperator::transport(const std::vector<double>& m, const std::vector<double>& v_up,
                            const std::vector<double>& carried,
                            const std::vector<double>& v_carry, const std::vector<double>& s2,
                            std::vector<double>& dm) const {
  const auto g = static_cast<std::size_t>(g_);
  const double inv_h = 1.0 / h_;
  const double half_inv_h2 = 0.5 / (h_ * h_);
  dm.assign(g, 0.0);
  const bool carry = !carried.empty();
  for (std::size_t f = 1; f < g; ++f) {
    const double v = v_up[f];
    double flux = (std::max(v, 0.0) * m[f - 1] + std::min(v, 0.0) * m[f]) * inv_h;
    if (carry) flux += v_carry[f] * (v >= 0.0 ? carried[f - 1] : carried[f]) * inv_h;
    flux -= (s2[f] * m[f] - s2[f - 1] * m[f - 1]) * half_inv_h2;
    dm[f - 1] -= flux;
    dm[f] += flux;
  }
}

void PdeOperator::rhs(const ChannelMasses& m, ChannelMasses& dm) const {
  ChannelMasses v;
  face_velocities(m, v);
  static const std::vector<double> none;
  for (int e = 0; e < 3; ++e) transport(m[e], v[e], none, none, s2_[e], dm[e]);
  std::vector<double> k;
  infection_field(m[1], k);
  const double gamma = config_.gamma;
  for (std::size_t c = 0; c < m[0].size(); ++c) {
    const double inf = k[c] * m[0][c];
    const double rec = gamma * m[1][c];
    dm[0][c] -= inf;
    dm[1][c] += inf - rec;
    dm[2][c] += rec;
  }
}

void PdeOperator::linear_rhs(const ChannelMasses& mu, const ChannelMasses& v_mu,
                             const std::vector<double>& k_mu, const ChannelMasses& eta,
                             ChannelMasses& deta) const {
  ChannelMasses v_eta;
  face_velocities(eta, v_eta);
  for (int e = 0; e < 3; ++e) transport(eta[e], v_mu[e], mu[e], v_eta[e], s2_[e], deta[e]);
  std::vector<double> k_eta;
  infection_field(eta[1], k_eta);
  const double gamma = config_.gamma;
  for (std::size_t c = 0; c < eta[0].size(); ++c) {
    const double inf = k_mu[c] * eta[0][c] + mu[0][c] * k_eta[c];
    const double rec = gamma * eta[1][c];
    deta[0][c] -= inf;
    deta[1][c] += inf - rec;
    deta[2][c] += rec;
  }
}

double PdeOperator::stable_dt() const {
  double dt = std::numeric_limits<double>::infinity();
  const double s = config_.diffusion.bound();
  if (s > 0.0) dt = std::min(dt, kCfl * h_ * h_ / (s * s));
  const double a = config_.drift.bound();
  if (a > 0.0) dt = std::min(dt, kCfl * h_ / a);
  return dt;
}

double pde_stable_dt(const ModelConfig& config, const Grid1D& grid) {
  return PdeOperator(config, grid).stable_dt();
}

ChannelMasses initial_cell_masses(const InitialLawSpec& law, const Grid1D& grid,
                                  double* tail_mass) {
  ChannelMasses m;
  double total = 0.0;
  for (EpidemicState e : kStates) {
    auto& me = m[code(e)];
    me.resize(static_cast<std::size_t>(grid.cells));
    for (int c = 0; c < grid.cells; ++c) {
      me[static_cast<std::size_t>(c)] = law.mass_1d(e, grid.face(c), grid.face(c + 1));
      total += me[static_cast<std::size_t>(c)];
    }
  }
  if (tail_mass != nullptr) *tail_mass = 1.0 - total;
  for (auto& me : m)
    for (double& v : me) v /= total;
  return m;
}

DensityTrajectory solve_pde(const ModelConfig& config, const Grid1D& grid, double T, double dt,
                            double store_dt) {
  config.validate();
  if (config.dim != 1) throw UsageError("solve_pde: the grid solver is 1-D only");
  grid.validate();
  if (!(T > 0.0) || !(dt > 0.0)) throw UsageError("solve_pde: need T > 0 and dt > 0");
  const PdeOperator op(config, grid);
  if (dt > op.stable_dt() * (1.0 + 1e-12)) {
    throw ConfigError("pde.dt", "dt = " + std::to_string(dt) + " exceeds the CFL limit " +
                                    std::to_string(op.stable_dt()));
  }
  if (store_dt <= 0.0) store_dt = T / static_cast<double>(steps_for(T, dt));
  const std::size_t intervals = steps_for(T, store_dt);
  if (std::abs(static_cast<double>(intervals) * store_dt - T) > 1e-9 * T) {
    throw UsageError("solve_pde: T must be a multiple of store_dt");
  }
  const std::size_t sub = steps_for(store_dt, dt);
  const double step = store_dt / static_cast<double>(sub);

  DensityTrajectory out;
  out.grid = grid;
  out.dt = step;
  ChannelMasses m = initial_cell_masses(config.initial, grid, &out.initial_tail_mass);
  if (out.initial_tail_mass > kTailGuard) {
    throw ConfigError("grid.domain", "domain misses " + std::to_string(out.initial_tail_mass) +
                                         " of the initial mass");
  }
  double total0 = 0.0;
  for (const auto& me : m)
    for (double v : me) total0 += v;
  out.times.push_back(0.0);
  out.mass.push_back(m);

  ChannelMasses dm;
  for (auto& v : dm) v.resize(m[0].size());
  for (std::size_t s = 0; s < intervals; ++s) {
    for (std::size_t k = 0; k < sub; ++k) {
      op.rhs(m, dm);
      double clipped = 0.0;
      for (int e = 0; e < 3; ++e) {
        for (std::size_t c = 0; c < m[e].size(); ++c) {
          double v = m[e][c] + step * dm[e][c];
          if (v < 0.0) {
            out.min_cell_before_clip = std::min(out.min_cell_before_clip, v);
            clipped -= v;
            v = 0.0;
          }
          m[e][c] = v;
        }
      }
      out.clipped_mass += clipped;
      out.max_clip_per_step = std::max(out.max_clip_per_step, clipped);
    }
    double total = 0.0;
    for (const auto& me : m)
      for (double v : me) total += v;
    if (!std::isfinite(total)) throw SolverError("solve_pde: non-finite mass");
    const double err = std::abs(total - total0);
    out.max_mass_error = std::max(out.max_mass_error, err);
    if (err > kMassGuard) {
      throw SolverError("solve_pde: total mass drifted by " + std::to_string(err));
    }
    out.times.push_back(static_cast<double>(s + 1) * store_dt);
    out.mass.push_back(m);
  }
  return out;
}

double pair_masses(const Grid1D& grid, const std::vector<double>& m, const TestFunction& phi) {
  double s = 0.0;
  for (int c = 0; c < grid.cells; ++c) s += phi(grid.center(c)) * m[static_cast<std::size_t>(c)];
  return s;
}

double pair_density(const DensityTrajectory& traj, double t, const TestFunction& phi,
                    EpidemicState e) {
  const ChannelMasses m = traj.at(t);
  return pair_masses(traj.grid, m[code(e)], phi);
}

Trajectory reference_ensemble(const ModelConfig& config, std::size_t n_ref, std::uint64_t seed,
                              const SimScheme& scheme) {
  RngStream rng = derive_stream(seed, "reference", 0);
  SimScheme s = scheme;
  s.record_log = false;
  return run(config, s, n_ref, rng);
}

}  // namespace mfsir
