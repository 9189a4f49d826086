// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/limit_spde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfsir/error.hpp"
#include "mfsir/parallel.hpp"

namespace mfsir {
namespace {

constexpr double kDensityFloor = 1e-14;
constexpr double kNegativeTol = 1e-12;

std::vector<double> at_centers(const Grid1D& grid, const TestFunction& phi) {
  std::vector<double> v(static_cast<std::size_t>(grid.cells));
  for (int c = 0; c < grid.cells; ++c) v[static_cast<std::size_t>(c)] = phi(grid.center(c));
  return v;
}

double pair_cells(const std::vector<double>& f, const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.size(); ++c) s += f[c] * m[c];
  return s;
}

void check_uniform_times(const DensityTrajectory& mu, double& dt) {
  if (mu.size() < 2) throw UsageError("LinearSpde: mu needs at least two stored times");
  dt = mu.times[1] - mu.times[0];
  for (std::size_t k = 1; k < mu.size(); ++k) {
    if (std::abs(mu.times[k] - mu.times[k - 1] - dt) > 1e-9 * std::max(1.0, mu.times.back())) {
      throw UsageError("LinearSpde: mu must be stored at every solver step");
    }
  }
}

}  // namespace

NoiseStep sample_noise_step(const Grid1D& grid, double dt, RngStream& rng) {
  const auto g = static_cast<std::size_t>(grid.cells);
  const double sd = std::sqrt(dt * grid.h());
  NoiseStep s;
  for (auto& m : s.motion) {
    m.assign(g + 1, 0.0);
    for (std::size_t f = 1; f < g; ++f) m[f] = sd * rng.normal();
  }
  s.infection.resize(g);
  for (double& v : s.infection) v = sd * rng.normal();
  s.recovery.resize(g);
  for (double& v : s.recovery) v = sd * rng.normal();
  return s;
}

NoiseField sample_noise(const Grid1D& grid, double dt, std::size_t steps, RngStream& rng) {
  NoiseField field;
  field.grid = grid;
  field.dt = dt;
  field.steps.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) field.steps.push_back(sample_noise_step(grid, dt, rng));
  return field;
}

ChannelMasses sample_eta0(const ChannelMasses& p, RngStream& rng) {
  double total = 0.0;
  for (const auto& pe : p) {
    for (double v : pe) {
      if (!(v >= -kNegativeTol)) throw UsageError("sample_eta0: negative cell mass");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw UsageError("sample_eta0: cell masses must sum to 1, got " + std::to_string(total));
  }
  ChannelMasses eta;
  double proj = 0.0;
  for (std::size_t e = 0; e < 3; ++e) {
    eta[e].resize(p[e].size());
    for (std::size_t c = 0; c < p[e].size(); ++c) {
      const double r = std::sqrt(std::max(p[e][c], 0.0));
      const double z = rng.normal();
      eta[e][c] = r * z;
      proj += r * z;
    }
  }
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t c = 0; c < p[e].size(); ++c) eta[e][c] -= std::max(p[e][c], 0.0) * proj;
  }
  return eta;
}

MartingaleBuilder::MartingaleBuilder(const ModelConfig& config, const Grid1D& grid)
    : config_(config), grid_(grid), op_(config, grid) {
  for (EpidemicState e : kStates) {
    auto& fs = face_sigma_[code(e)];
    fs.resize(static_cast<std::size_t>(grid.cells) + 1);
    for (int f = 0; f <= grid.cells; ++f) {
      const double x = grid.face(f);
      fs[static_cast<std::size_t>(f)] = config.diffusion.sigma(Point(&x, 1), e);
    }
  }
}

void MartingaleBuilder::increment(const NoiseStep& noise, const ChannelMasses& mu,
                                  ChannelMasses& dm) const {
  std::vector<double> k;
  op_.infection_field(mu[1], k);
  increment(noise, mu, k, dm);
}

void MartingaleBuilder::increment(const NoiseStep& noise, const ChannelMasses& mu,
                                  const std::vector<double>& k_mu, ChannelMasses& dm) const {
  const auto g = static_cast<std::size_t>(grid_.cells);
  const double h = grid_.h();
  for (const auto& me : mu) {
    for (double v : me) {
      if (!(v >= -kNegativeTol)) throw UsageError("MartingaleBuilder: negative density");
    }
  }
  for (std::size_t e = 0; e < 3; ++e) {
    const auto& m = mu[e];
    auto& out = dm[e];
    out.assign(g, 0.0);
    for (std::size_t f = 1; f < g; ++f) {
      const double rho = 0.5 * (m[f - 1] + m[f]) / h;
      if (rho < kDensityFloor) continue;
      const double flux = face_sigma_[e][f] * std::sqrt(rho) * noise.motion[e][f] / h;
      out[f - 1] -= flux;
      out[f] += flux;
    }
  }
  const double gamma = config_.gamma;
  for (std::size_t c = 0; c < g; ++c) {
    const double rho_s = mu[0][c] / h;
    if (rho_s >= kDensityFloor && k_mu[c] > 0.0) {
      const double a = std::sqrt(rho_s * k_mu[c]) * noise.infection[c];
      dm[0][c] -= a;
      dm[1][c] += a;
    }
    const double rho_i = mu[1][c] / h;
    if (rho_i >= kDensityFloor && gamma > 0.0) {
      const double b = std::sqrt(gamma * rho_i) * noise.recovery[c];
      dm[1][c] -= b;
      dm[2][c] += b;
    }
  }
}

std::array<double, 3> build_martingale_increment(const NoiseStep& noise, const ChannelMasses& mu,
                                                 const TestFunction& phi,
                                                 const ModelConfig& config, const Grid1D& grid) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (phi.is_zero()) return out;
  const MartingaleBuilder builder(config, grid);
  ChannelMasses dm;
  builder.increment(noise, mu, dm);
  const std::vector<double> f = at_centers(grid, phi);
  for (std::size_t e = 0; e < 3; ++e) out[e] = pair_cells(f, dm[e]);
  return out;
}

double covariance_quadrature(const StateTestFunction& phi1, const StateTestFunction& phi2,
                             double t, double s, const DensityTrajectory& mu,
                             const ModelConfig& config) {
  const double u = std::min(t, s);
  if (u < 0.0 || mu.size() == 0 || u > mu.times.back() + 1e-12) {
    throw UsageError("covariance_quadrature: time outside the trajectory");
  }
  const Grid1D& grid = mu.grid;
  const auto g = static_cast<std::size_t>(grid.cells);
  const PdeOperator op(config, grid);
  struct Nodes {
    std::vector<double> v, dv;
  };
  auto nodes = [&](const TestFunction& f) {
    Nodes n{std::vector<double>(g), std::vector<double>(g)};
    for (std::size_t c = 0; c < g; ++c) {
      const double x = grid.center(static_cast<int>(c));
      n.v[c] = f(x);
      n.dv[c] = f.derivative(x);
    }
    return n;
  };
  std::array<Nodes, 3> a, b;
  for (std::size_t e = 0; e < 3; ++e) {
    a[e] = nodes(phi1[e]);
    b[e] = nodes(phi2[e]);
  }
  const double gamma = config.gamma;
  auto integrand = [&](const ChannelMasses& m) {
    std::vector<double> k;
    op.infection_field(m[1], k);
    double acc = 0.0;
    for (std::size_t c = 0; c < g; ++c) {
      for (std::size_t e = 0; e < 3; ++e) {
        acc += m[e][c] * op.sigma2(kStates[e])[c] * a[e].dv[c] * b[e].dv[c];
      }
      acc += m[0][c] * k[c] * (a[1].v[c] - a[0].v[c]) * (b[1].v[c] - b[0].v[c]);
      acc += gamma * m[1][c] * (a[2].v[c] - a[1].v[c]) * (b[2].v[c] - b[1].v[c]);
    }
    return acc;
  };
  double total = 0.0;
  double prev_t = mu.times[0];
  double prev_f = integrand(mu.mass[0]);
  for (std::size_t k = 1; k < mu.size() && mu.times[k - 1] < u - 1e-12; ++k) {
    const double tk = std::min(mu.times[k], u);
    const double fk = tk == mu.times[k] ? integrand(mu.mass[k]) : integrand(mu.at(tk));
    total += 0.5 * (tk - prev_t) * (prev_f + fk);
    prev_t = tk;
    prev_f = fk;
  }
  return total;
}

double FluctuationField::pairing(std::size_t k, const StateTestFunction& phi) const {
  double s = 0.0;
  for (std::size_t e = 0; e < 3; ++e) {
    if (phi[e].is_zero()) continue;
    s += pair_masses(grid, eta[k][e], phi[e]);
  }
  return s;
}

double FluctuationField::pairing(std::size_t k, const TestFunction& phi, EpidemicState e) const {
  return phi.is_zero() ? 0.0 : pair_masses(grid, eta[k][code(e)], phi);
}

double FluctuationField::total(std::size_t k) const {
  double s = 0.0;
  for (const auto& e : eta[k])
    for (double v : e) s += v;
  return s;
}

LinearSpde::LinearSpde(const ModelConfig& config, const DensityTrajectory& mu)
    : config_(config), mu_(&mu), op_(config, mu.grid), builder_(config, mu.grid) {
  check_uniform_times(mu, dt_);
  if (dt_ > op_.stable_dt() * (1.0 + 1e-12)) {
    throw ConfigError("pde.dt", "SPDE step " + std::to_string(dt_) + " exceeds the CFL limit " +
                                    std::to_string(op_.stable_dt()));
  }
  v_mu_.resize(steps());
  k_mu_.resize(steps());
  for (std::size_t k = 0; k < steps(); ++k) {
    op_.face_velocities(mu.mass[k], v_mu_[k]);
    op_.infection_field(mu.mass[k][1], k_mu_[k]);
  }
}

std::size_t LinearSpde::step_of(double t) const { return mu_->index_of(t); }

template <class NoiseAt>
FluctuationField LinearSpde::run(const ChannelMasses& eta0, NoiseAt&& noise_at,
                                 const std::vector<std::size_t>& store_steps) const {
  const auto g = static_cast<std::size_t>(grid().cells);
  for (const auto& e : eta0) {
    if (e.size() != g) throw UsageError("LinearSpde: eta0 does not match the grid");
  }
  if (!std::is_sorted(store_steps.begin(), store_steps.end()) ||
      (!store_steps.empty() && store_steps.back() > steps())) {
    throw UsageError("LinearSpde: store steps must be sorted and within range");
  }
  FluctuationField out;
  out.grid = grid();
  std::size_t next = 0;
  auto store = [&](std::size_t k, const ChannelMasses& eta) {
    while (next < store_steps.size() && store_steps[next] == k) {
      for (const auto& e : eta) {
        for (double v : e) {
          if (!std::isfinite(v)) {
            throw NumericalError("LinearSpde: non-finite field at step " + std::to_string(k));
          }
        }
      }
      out.times.push_back(mu_->times[k]);
      out.eta.push_back(eta);
      ++next;
    }
  };
  ChannelMasses eta = eta0;
  ChannelMasses deta;
  ChannelMasses dm;
  store(0, eta);
  for (std::size_t k = 0; k < steps() && next < store_steps.size(); ++k) {
    op_.linear_rhs(mu_->mass[k], v_mu_[k], k_mu_[k], eta, deta);
    const NoiseStep* noise = noise_at(k);
    if (noise != nullptr) builder_.increment(*noise, mu_->mass[k], k_mu_[k], dm);
    for (std::size_t e = 0; e < 3; ++e) {
      for (std::size_t c = 0; c < g; ++c) {
        eta[e][c] += dt_ * deta[e][c];
        if (noise != nullptr) eta[e][c] += dm[e][c];
      }
    }
    store(k + 1, eta);
  }
  return out;
}

FluctuationField LinearSpde::solve(const ChannelMasses& eta0, const NoiseField* noise,
                                   const std::vector<std::size_t>& store_steps) const {
  if (noise != nullptr && noise->steps.size() < steps()) {
    throw UsageError("LinearSpde: noise field is shorter than the trajectory");
  }
  return run(
      eta0,
      [&](std::size_t k) -> const NoiseStep* {
        return noise == nullptr ? nullptr : &noise->steps[k];
      },
      store_steps);
}

FluctuationField LinearSpde::solve(const ChannelMasses& eta0, RngStream& rng,
                                   const std::vector<std::size_t>& store_steps) const {
  NoiseStep current;
  return run(
      eta0,
      [&](std::size_t) -> const NoiseStep* {
        current = sample_noise_step(grid(), dt_, rng);
        return &current;
      },
      store_steps);
}

FluctuationField solve_linear_spde(const DensityTrajectory& mu, const ChannelMasses& eta0,
                                   const NoiseField* noise, double T, double dt,
                                   const ModelConfig& config) {
  const LinearSpde spde(config, mu);
  if (std::abs(spde.dt() - dt) > 1e-9 * dt || std::abs(mu.times.back() - T) > 1e-9 * T) {
    throw UsageError("solve_linear_spde: T and dt must match the stored mu trajectory");
  }
  std::vector<std::size_t> all(spde.steps() + 1);
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return spde.solve(eta0, noise, all);
}

CltResult spde_experiment(const ModelConfig& config, const DensityTrajectory& mu,
                          const SpdeOptions& options) {
  const LinearSpde spde(config, mu);
  CltResult result;
  result.checkpoints = options.checkpoints;
  if (result.checkpoints.empty()) result.checkpoints = {mu.times.back()};
  result.bank = options.bank.empty() ? standard_bank() : options.bank;
  std::vector<std::size_t> store;
  for (double t : result.checkpoints) store.push_back(spde.step_of(t));
  const std::size_t K = result.bank.size();
  const std::size_t C = result.checkpoints.size();
  result.samples.resize(options.reps);
  parallel_for(options.reps, options.workers, [&](std::size_t rep) {
    RngStream rng = derive_stream(options.seed, options.tag, rep);
    const ChannelMasses eta0 = sample_eta0(mu.mass[0], rng);
    const FluctuationField field = spde.solve(eta0, rng, store);
    FluctuationSample& out = result.samples[rep];
    out.rep = rep;
    out.eta.assign(3 * K * C, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t c = 0; c < C; ++c) {
        for (EpidemicState e : kStates) {
          out.eta[result.index(e, k, c)] = field.pairing(c, result.bank[k], e);
        }
      }
    }
  });
  return result;
}

std::vector<std::vector<double>> limit_martingale_samples(
    const ModelConfig& config, const DensityTrajectory& mu,
    const std::vector<StateTestFunction>& functions, const LimitMartingaleOptions& options) {
  double dt = 0.0;
  check_uniform_times(mu, dt);
  const Grid1D& grid = mu.grid;
  const MartingaleBuilder builder(config, grid);
  const PdeOperator op(config, grid);
  std::vector<std::size_t> at;
  for (double t : options.times) at.push_back(mu.index_of(t));
  const std::size_t last = at.empty() ? 0 : *std::max_element(at.begin(), at.end());
  std::vector<std::vector<double>> k_mu(last);
  for (std::size_t k = 0; k < last; ++k) op.infection_field(mu.mass[k][1], k_mu[k]);
  std::vector<std::array<std::vector<double>, 3>> values(functions.size());
  for (std::size_t j = 0; j < functions.size(); ++j) {
    for (std::size_t e = 0; e < 3; ++e) values[j][e] = at_centers(grid, functions[j][e]);
  }
  const std::size_t T = at.size();
  std::vector<std::vector<double>> out(options.paths);
  parallel_for(options.paths, options.workers, [&](std::size_t p) {
    RngStream rng = derive_stream(options.seed, options.tag, p);
    std::vector<double> acc(functions.size(), 0.0);
    std::vector<double>& row = out[p];
    row.assign(functions.size() * T, 0.0);
    ChannelMasses dm;
    auto record = [&](std::size_t k) {
      for (std::size_t t = 0; t < T; ++t) {
        if (at[t] != k) continue;
        for (std::size_t j = 0; j < functions.size(); ++j) row[j * T + t] = acc[j];
      }
    };
    record(0);
    for (std::size_t k = 0; k < last; ++k) {
      const NoiseStep noise = sample_noise_step(grid, dt, rng);
      builder.increment(noise, mu.mass[k], k_mu[k], dm);
      for (std::size_t j = 0; j < functions.size(); ++j) {
        for (std::size_t e = 0; e < 3; ++e) acc[j] += pair_cells(values[j][e], dm[e]);
      }
      record(k + 1);
    }
  });
  return out;
}

std::vector<CompareRow> compare_projections(const CltResult& particle, const CltResult& spde,
                                            const std::vector<EpidemicState>& states,
                                            double alpha, double lo, double hi) {
  if (particle.bank.size() != spde.bank.size() ||
      particle.checkpoints.size() != spde.checkpoints.size()) {
    throw UsageError("compare_projections: bank or checkpoints differ");
  }
  std::vector<CompareRow> rows;
  for (EpidemicState e : states) {
    for (std::size_t k = 0; k < particle.bank.size(); ++k) {
      for (std::size_t c = 0; c < particle.checkpoints.size(); ++c) {
        const std::vector<double> a = particle.column(&FluctuationSample::eta, e, k, c);
        const std::vector<double> b = spde.column(&FluctuationSample::eta, e, k, c);
        CompareRow row;
        row.state = e;
        row.k = k;
        row.c = c;
        row.ks = ks_two_sample(a, b);
        row.var_particle = summarize(a).variance;
        row.var_spde = summarize(b).variance;
        row.ratio = row.var_spde > 0.0 ? row.var_particle / row.var_spde : 0.0;
        row.pass = !row.ks.reject(alpha) && row.ratio >= lo && row.ratio <= hi;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<CovTuple> standard_covariance_tuples(double T) {
  const double tau = std::min(T, 1.0);
  const TestFunction g0 = TestFunction::gauss_hermite(0, 1.0);
  const TestFunction g1 = TestFunction::gauss_hermite(1, 1.0);
  const TestFunction g2 = TestFunction::gauss_hermite(2, 1.0);
  const TestFunction w0 = TestFunction::gauss_hermite(0, 2.0);
  const TestFunction left = TestFunction::bump(-3.0, 1.0);
  const TestFunction right = TestFunction::bump(3.0, 1.0);
  const StateTestFunction all{g0, g0, g0};
  return {
      {"S_gh01_var", on_state(g0, EpidemicState::S), on_state(g0, EpidemicState::S), tau, tau,
       false},
      {"I_gh11_lag", on_state(g1, EpidemicState::I), on_state(g1, EpidemicState::I), 0.5 * tau,
       tau, false},
      {"R_gh02_var", on_state(w0, EpidemicState::R), on_state(w0, EpidemicState::R), tau, tau,
       false},
      {"all_gh01_var", all, all, tau, tau, false},
      {"S_gh21_lag", on_state(g2, EpidemicState::S), on_state(g2, EpidemicState::S), 0.75 * tau,
       tau, false},
      {"S_disjoint", on_state(left, EpidemicState::S), on_state(right, EpidemicState::S), tau, tau,
       true},
      {"I_disjoint", on_state(left, EpidemicState::I), on_state(right, EpidemicState::I), tau,
       0.5 * tau, true},
  };
}

std::vector<CovRow> covariance_check(const ModelConfig& config, const DensityTrajectory& mu,
                                     const std::vector<CovTuple>& tuples,
                                     const LimitMartingaleOptions& options, double rel_tol,
                                     double abs_tol) {
  std::vector<double> times;
  std::vector<StateTestFunction> functions;
  for (const auto& tp : tuples) {
    times.push_back(tp.t);
    times.push_back(tp.s);
    functions.push_back(tp.phi1);
    functions.push_back(tp.phi2);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  LimitMartingaleOptions opts = options;
  opts.times = times;
  const auto samples = limit_martingale_samples(config, mu, functions, opts);
  const std::size_t T = times.size();
  auto slot = [&](double t) {
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) -
                                    times.begin());
  };
  std::vector<CovRow> rows;
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    const CovTuple& tp = tuples[j];
    std::vector<double> u(samples.size()), v(samples.size());
    for (std::size_t p = 0; p < samples.size(); ++p) {
      u[p] = samples[p][(2 * j) * T + slot(tp.t)];
      v[p] = samples[p][(2 * j + 1) * T + slot(tp.s)];
    }
    RngStream boot = derive_stream(options.seed, options.tag + "/bootstrap", j);
    CovRow row;
    row.name = tp.name;
    row.degenerate = tp.degenerate;
    row.t = tp.t;
    row.s = tp.s;
    row.mc = cov_with_ci(u, v, 200, boot);
    row.quadrature = covariance_quadrature(tp.phi1, tp.phi2, tp.t, tp.s, mu, config);
    row.abs_error = std::abs(row.mc.estimate - row.quadrature);
    row.rel_error = row.quadrature != 0.0 ? row.abs_error / std::abs(row.quadrature)
                                          : std::numeric_limits<double>::infinity();
    row.pass = tp.degenerate ? row.abs_error <= abs_tol : row.rel_error <= rel_tol;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mfsir
