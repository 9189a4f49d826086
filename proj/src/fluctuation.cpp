// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/fluctuation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "mfsir/error.hpp"
#include "mfsir/measures.hpp"
#include "mfsir/pair_sums.hpp"
#include "mfsir/parallel.hpp"
#include "mfsir/rng.hpp"

namespace mfsir {
namespace {

void require_log(const EventLog& log) {
  if (log.positions.empty() || (log.steps > 0 && log.brownian.empty())) {
    throw UsageError("event log has no Brownian increments; enable record_log in the scheme");
  }
}

double norm2(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return s;
}

double dot(const std::vector<double>& a, const double* b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

EpidemicState next_state(EpidemicState e) {
  return e == EpidemicState::S ? EpidemicState::I : EpidemicState::R;
}

// Jumps recorded during step k have time in [k dt, (k + 1) dt).
std::size_t jump_step(const JumpRecord& j, double dt, std::size_t steps) {
  const auto k = static_cast<std::size_t>(std::floor(j.time / dt + 1e-9));
  return std::min(k, steps - 1);
}

std::vector<double> default_checkpoints(double T) {
  return {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T};
}

}  // namespace

double eta_projection(const ParticleEnsemble& ensemble, const DensityTrajectory& limit, double t,
                      const TestFunction& phi, EpidemicState e) {
  return eta_projection(ensemble, limit, t, on_state(phi, e));
}

double eta_projection(const ParticleEnsemble& ensemble, const DensityTrajectory& limit, double t,
                      const StateTestFunction& phi) {
  if (ensemble.dim != 1) throw UsageError("eta_projection: the PDE limit is 1-D");
  const auto n = static_cast<double>(ensemble.size());
  double particle = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const TestFunction& f = phi[code(ensemble.states[i])];
    if (!f.is_zero()) particle += f(ensemble.positions[i]);
  }
  particle /= n;
  const ChannelMasses m = limit.at(t);
  double lim = 0.0;
  for (EpidemicState e : kStates) {
    if (!phi[code(e)].is_zero()) lim += pair_masses(limit.grid, m[code(e)], phi[code(e)]);
  }
  return std::sqrt(n) * (particle - lim);
}

ChannelPaths martingale_channels(const EventLog& log, const ModelConfig& config,
                                 const TestFunction& phi) {
  require_log(log);
  const std::size_t n = log.n;
  const auto d = static_cast<std::size_t>(log.dim);
  ChannelPaths out;
  for (auto& p : out) p.assign(log.steps + 1, 0.0);
  if (phi.is_zero()) return out;
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  std::vector<double> grad(d);
  std::size_t next_jump = 0;
  for (std::size_t k = 0; k < log.steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Point x = log.position(k, i);
      const EpidemicState e = log.state(k, i);
      phi.gradient(x, grad);
      const double sig = config.diffusion.sigma(x, e);
      acc[code(e)] += sig * dot(grad, log.brownian.data() + (k * n + i) * d);
      if (e == EpidemicState::R) continue;
      const double c = log.compensator[k * n + i];
      if (c == 0.0) continue;
      const double v = phi.value(x);
      acc[code(e)] += c * v;
      acc[code(next_state(e))] -= c * v;
    }
    while (next_jump < log.jumps.size() &&
           jump_step(log.jumps[next_jump], log.dt, log.steps) == k) {
      const JumpRecord& j = log.jumps[next_jump];
      const double v = phi.value(Point(log.jump_positions.data() + next_jump * d, d));
      acc[code(j.from)] -= v;
      acc[code(j.to)] += v;
      ++next_jump;
    }
    for (std::size_t e = 0; e < 3; ++e) out[e][k + 1] = acc[e];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& p : out) {
    for (double& v : p) v *= scale;
  }
  return out;
}

std::vector<double> assemble_martingale(const EventLog& log, const ModelConfig& config,
                                        const TestFunction& phi, EpidemicState e) {
  return martingale_channels(log, config, phi)[code(e)];
}

std::vector<double> assemble_martingale(const EventLog& log, const ModelConfig& config,
                                        const StateTestFunction& phi) {
  require_log(log);
  std::vector<double> out(log.steps + 1, 0.0);
  for (EpidemicState e : kStates) {
    if (phi[code(e)].is_zero()) continue;
    const std::vector<double> m = assemble_martingale(log, config, phi[code(e)], e);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += m[k];
  }
  return out;
}

ChannelPaths qv_channels(const EventLog& log, const ModelConfig& config, const TestFunction& phi) {
  require_log(log);
  const std::size_t n = log.n;
  const auto d = static_cast<std::size_t>(log.dim);
  ChannelPaths out;
  for (auto& p : out) p.assign(log.steps + 1, 0.0);
  if (phi.is_zero()) return out;
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  std::vector<double> grad(d);
  const double w = log.dt / static_cast<double>(n);
  for (std::size_t k = 0; k < log.steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Point x = log.position(k, i);
      const EpidemicState e = log.state(k, i);
      phi.gradient(x, grad);
      const double sig = config.diffusion.sigma(x, e);
      acc[code(e)] += w * sig * sig * norm2(grad);
      if (e == EpidemicState::R) continue;
      const double rate = log.rates[k * n + i];
      if (rate == 0.0) continue;
      const double v = phi.value(x);
      acc[code(e)] += w * rate * v * v;
      acc[code(next_state(e))] += w * rate * v * v;
    }
    for (std::size_t e = 0; e < 3; ++e) out[e][k + 1] = acc[e];
  }
  return out;
}

std::vector<double> qv_formula(const EventLog& log, const ModelConfig& config,
                               const TestFunction& phi, EpidemicState e) {
  return qv_channels(log, config, phi)[code(e)];
}

std::vector<double> qv_formula(const EventLog& log, const ModelConfig& config,
                               const StateTestFunction& phi) {
  require_log(log);
  const std::size_t n = log.n;
  const auto d = static_cast<std::size_t>(log.dim);
  std::vector<double> out(log.steps + 1, 0.0);
  std::vector<double> grad(d);
  const double w = log.dt / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < log.steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Point x = log.position(k, i);
      const EpidemicState e = log.state(k, i);
      const TestFunction& f = phi[code(e)];
      if (!f.is_zero()) {
        f.gradient(x, grad);
        const double sig = config.diffusion.sigma(x, e);
        acc += w * sig * sig * norm2(grad);
      }
      if (e == EpidemicState::R) continue;
      const double rate = log.rates[k * n + i];
      if (rate == 0.0) continue;
      const double jump = phi[code(next_state(e))].value(x) - f.value(x);
      acc += w * rate * jump * jump;
    }
    out[k + 1] = acc;
  }
  return out;
}

std::vector<double> semimartingale_residual(const EventLog& log, const ModelConfig& config,
                                            const StateTestFunction& phi) {
  require_log(log);
  const std::size_t n = log.n;
  const auto d = static_cast<std::size_t>(log.dim);
  const std::vector<double> mart = assemble_martingale(log, config, phi);
  PairSums sums;
  std::vector<double> drift(n * d);
  std::vector<double> grad(d);
  auto pairing = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const TestFunction& f = phi[code(log.state(k, i))];
      if (!f.is_zero()) s += f.value(log.position(k, i));
    }
    return s / static_cast<double>(n);
  };
  const double root_n = std::sqrt(static_cast<double>(n));
  const double p0 = pairing(0);
  std::vector<double> out(log.steps + 1, 0.0);
  double integral = 0.0;
  for (std::size_t k = 0; k < log.steps; ++k) {
    const ParticleEnsemble ens = log.ensemble(k);
    sums.drift(config.drift, ens, drift);
    double gen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point x = ens.position(i);
      const EpidemicState e = ens.states[i];
      const TestFunction& f = phi[code(e)];
      if (!f.is_zero()) {
        f.gradient(x, grad);
        const double sig = config.diffusion.sigma(x, e);
        gen += dot(grad, drift.data() + i * d) + 0.5 * sig * sig * f.laplacian(x);
      }
      if (e == EpidemicState::R) continue;
      const double rate = log.rates[k * n + i];
      if (rate != 0.0) gen += rate * (phi[code(next_state(e))].value(x) - f.value(x));
    }
    integral += log.dt * gen / static_cast<double>(n);
    out[k + 1] = root_n * (pairing(k + 1) - p0 - integral) - mart[k + 1];
  }
  return out;
}

double lln_distance(const ParticleEnsemble& ensemble, const DensityTrajectory& limit) {
  if (ensemble.dim != 1) throw UsageError("lln_distance: the PDE limit is 1-D");
  const ChannelMasses m = limit.at(ensemble.time);
  const StateClouds clouds = empirical_measure(ensemble);
  double total = 0.0;
  for (EpidemicState e : kStates) {
    const std::vector<double>& cells = m[code(e)];
    double lim_mass = 0.0;
    for (double v : cells) lim_mass += v;
    Cloud c = clouds[code(e)];
    const double n_mass = c.mass();
    total += std::abs(n_mass - lim_mass);
    if (c.size() == 0 || lim_mass <= 0.0) continue;
    for (double& w : c.weights) w = 1.0 / static_cast<double>(c.size());
    std::vector<double> normed(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) normed[k] = cells[k] / lim_mass;
    total += w1_1d_to_density(c, limit.grid, normed);
  }
  return total;
}

LlnResult lln_experiment(const ModelConfig& config, const LlnOptions& options) {
  config.validate();
  if (options.ns.size() < 3) throw UsageError("lln_experiment: need at least 3 values of N");
  if (options.reps < 2) throw UsageError("lln_experiment: need at least 2 replications");
  SimScheme scheme = options.scheme;
  scheme.snapshot_times = {options.final_time};
  scheme.record_log = false;
  scheme.validate();

  LlnResult result;
  result.table.dim = config.dim;

  DensityTrajectory pde;
  std::array<std::optional<SlicedReference>, 3> refs;
  if (config.dim == 1) {
    const Grid1D grid = Grid1D::covering(config, options.final_time, options.grid_cells);
    pde = solve_pde(config, grid, options.final_time, pde_stable_dt(config, grid),
                    options.final_time);
    for (EpidemicState e : kStates) {
      result.limit_mass[code(e)] = pde.channel_mass(pde.size() - 1, e);
    }
    result.limit_kind = "pde";
  } else {
    const Trajectory ref = reference_ensemble(config, options.n_ref, options.seed, scheme);
    const StateClouds clouds = empirical_measure(ref.snapshots.back());
    RngStream dir_rng = derive_stream(options.seed, "lln/directions", 0);
    const std::vector<double> dirs = random_directions(config.dim, options.n_proj, dir_rng);
    for (EpidemicState e : kStates) {
      const Cloud& c = clouds[code(e)];
      result.limit_mass[code(e)] = c.mass();
      if (c.size() > 0) refs[code(e)].emplace(c, dirs);
    }
    result.limit_kind = "reference_ensemble";
  }

  for (std::size_t n : options.ns) {
    std::vector<double> dist(options.reps);
    const std::string tag = "lln/N=" + std::to_string(n);
    parallel_for(options.reps, options.workers, [&](std::size_t rep) {
      RngStream rng = derive_stream(options.seed, tag, rep);
      ParticleSimulator sim(config, scheme);
      const Trajectory tr = sim.run(n, rng);
      const ParticleEnsemble& ens = tr.snapshots.back();
      if (config.dim == 1) {
        dist[rep] = lln_distance(ens, pde);
        return;
      }
      const StateClouds clouds = empirical_measure(ens);
      double total = 0.0;
      for (EpidemicState e : kStates) {
        const Cloud& c = clouds[code(e)];
        total += std::abs(c.mass() - result.limit_mass[code(e)]);
        if (c.size() > 0 && refs[code(e)]) total += refs[code(e)]->distance(c);
      }
      dist[rep] = total;
    });
    const Summary s = summarize(dist);
    result.table.rows.push_back({n, options.reps, s.mean, s.se});
    result.samples.push_back(std::move(dist));
  }
  result.table.validate();
  result.fit = fit_power_law(result.table);
  return result;
}

std::vector<double> CltResult::column(const std::vector<double> FluctuationSample::*field,
                                      EpidemicState e, std::size_t k, std::size_t c) const {
  const std::size_t idx = index(e, k, c);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back((s.*field)[idx]);
  return out;
}

CltResult clt_experiment(const ModelConfig& config, const DensityTrajectory* limit,
                         const CltOptions& options) {
  config.validate();
  if (options.reps < 1 || options.n < 1) throw UsageError("clt_experiment: need N, reps >= 1");
  if (limit != nullptr && config.dim != 1) throw UsageError("clt_experiment: eta needs d = 1");
  CltResult result;
  result.checkpoints =
      options.checkpoints.empty() ? default_checkpoints(options.final_time) : options.checkpoints;
  result.bank = options.bank.empty() ? standard_bank() : options.bank;
  SimScheme scheme = options.scheme;
  scheme.snapshot_times = result.checkpoints;
  scheme.record_log = options.martingales;
  scheme.validate();
  const std::vector<std::size_t> steps = scheme.snapshot_steps();

  const std::size_t K = result.bank.size();
  const std::size_t C = result.checkpoints.size();
  const std::size_t width = 3 * K * C;
  result.samples.resize(options.reps);
  parallel_for(options.reps, options.workers, [&](std::size_t rep) {
    RngStream rng = derive_stream(options.seed, options.tag, rep);
    ParticleSimulator sim(config, scheme);
    const Trajectory tr = sim.run(options.n, rng);
    FluctuationSample& out = result.samples[rep];
    out.rep = rep;
    out.eta.assign(width, std::numeric_limits<double>::quiet_NaN());
    if (options.martingales) {
      out.martingale.assign(width, 0.0);
      out.qv.assign(width, 0.0);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const TestFunction& phi = result.bank[k];
      if (limit != nullptr) {
        for (std::size_t c = 0; c < C; ++c) {
          for (EpidemicState e : kStates) {
            out.eta[result.index(e, k, c)] =
                eta_projection(tr.snapshots[c], *limit, result.checkpoints[c], phi, e);
          }
        }
      }
      if (!options.martingales) continue;
      const ChannelPaths m = martingale_channels(tr.log, config, phi);
      const ChannelPaths q = qv_channels(tr.log, config, phi);
      for (std::size_t c = 0; c < C; ++c) {
        for (EpidemicState e : kStates) {
          out.martingale[result.index(e, k, c)] = m[code(e)][steps[c]];
          out.qv[result.index(e, k, c)] = q[code(e)][steps[c]];
        }
      }
    }
  });
  return result;
}

std::vector<QvRow> qv_table(const CltResult& result, std::size_t checkpoint, double lo,
                            double hi, double qv_floor) {
  std::vector<QvRow> rows;
  if (result.samples.empty() || result.samples[0].martingale.empty()) {
    throw UsageError("qv_table: samples carry no martingale paths");
  }
  for (EpidemicState e : kStates) {
    for (std::size_t k = 0; k < result.bank.size(); ++k) {
      const std::vector<double> m =
          result.column(&FluctuationSample::martingale, e, k, checkpoint);
      const std::vector<double> q = result.column(&FluctuationSample::qv, e, k, checkpoint);
      std::vector<double> m2(m.size());
      for (std::size_t r = 0; r < m.size(); ++r) m2[r] = m[r] * m[r];
      const Summary sm = summarize(m);
      const Summary sm2 = summarize(m2);
      const Summary sq = summarize(q);
      QvRow row;
      row.state = e;
      row.k = k;
      row.mean_m = sm.mean;
      row.se_m = sm.se;
      row.mean_m2 = sm2.mean;
      row.mean_qv = sq.mean;
      row.ratio = sq.mean > 0.0 ? sm2.mean / sq.mean : 0.0;
      row.ratio_se = sq.mean > 0.0 ? sm2.se / sq.mean : 0.0;
      row.checked = sq.mean >= qv_floor;
      row.pass = !row.checked || (row.ratio >= lo && row.ratio <= hi);
      row.mean_zero = std::abs(sm.mean) <= 3.0 * sm.se;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace mfsir
