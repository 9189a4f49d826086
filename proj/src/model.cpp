// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mfsir/error.hpp"

namespace mfsir {
namespace {

// max_s |d/ds exp(1 - 1/(1 - s^2))| on [0, 1), attained near s = 0.76.
constexpr double kBumpSlope = 2.1703572;

double dist2(Point x, Point y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double u = y[k] - x[k];
    s += u * u;
  }
  return s;
}

void check_dims(Point x, Point y, const char* op) {
  if (x.size() != y.size() || x.empty()) {
    throw UsageError(std::string(op) + ": dimension mismatch (" +
                     std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::string_view to_string(EpidemicState e) {
  switch (e) {
    case EpidemicState::S: return "S";
    case EpidemicState::I: return "I";
    case EpidemicState::R: return "R";
  }
  return "?";
}

std::optional<EpidemicState> parse_state(std::string_view text) {
  if (text == "S" || text == "0") return EpidemicState::S;
  if (text == "I" || text == "1") return EpidemicState::I;
  if (text == "R" || text == "2") return EpidemicState::R;
  return std::nullopt;
}

ParticleEnsemble::ParticleEnsemble(int d, std::size_t n)
    : dim(d), positions(n * static_cast<std::size_t>(d), 0.0), states(n, EpidemicState::S) {}

Individual ParticleEnsemble::individual(std::size_t i) const {
  const Point p = position(i);
  return {std::vector<double>(p.begin(), p.end()), states[i]};
}

std::array<std::size_t, 3> ParticleEnsemble::counts() const {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (EpidemicState e : states) ++c[code(e)];
  return c;
}

double Cloud::mass() const {
  double m = 0.0;
  for (double w : weights) m += w;
  return m;
}

void Cloud::add(Point x, double w) {
  positions.insert(positions.end(), x.begin(), x.end());
  weights.push_back(w);
}

MarkedCloud marked_cloud(const ParticleEnsemble& ensemble) {
  MarkedCloud m;
  m.dim = ensemble.dim;
  m.positions = ensemble.positions;
  m.states = ensemble.states;
  m.weights.assign(ensemble.size(), 1.0 / static_cast<double>(ensemble.size()));
  return m;
}

StateClouds split_by_state(const MarkedCloud& measure) {
  StateClouds out;
  for (auto& c : out) c.dim = measure.dim;
  for (std::size_t j = 0; j < measure.size(); ++j) {
    out[code(measure.states[j])].add(measure.point(j), measure.weights[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Infection kernel

KernelSpec KernelSpec::constant(double beta) { return {Family::constant, beta, 1.0}; }
KernelSpec KernelSpec::gaussian(double beta, double length) {
  return {Family::gaussian, beta, length};
}
KernelSpec KernelSpec::bump(double beta, double radius) { return {Family::bump, beta, radius}; }

double KernelSpec::profile(double d2) const {
  switch (family) {
    case Family::constant: return beta;
    case Family::gaussian: return beta * std::exp(-0.5 * d2 / (length * length));
    case Family::bump: {
      const double q = d2 / (length * length);
      if (q >= 1.0) return 0.0;
      return beta * std::exp(1.0 - 1.0 / (1.0 - q));
    }
  }
  return 0.0;
}

double KernelSpec::operator()(Point x, Point y) const { return profile(dist2(x, y)); }

double KernelSpec::lipschitz() const {
  switch (family) {
    case Family::constant: return 0.0;
    case Family::gaussian: return beta * std::exp(-0.5) / length;
    case Family::bump: return beta * kBumpSlope / length;
  }
  return 0.0;
}

double KernelSpec::support_radius() const {
  return family == Family::bump ? length : std::numeric_limits<double>::infinity();
}

void KernelSpec::validate() const {
  if (!finite_nonneg(beta)) throw ConfigError("kernel.beta", "must be finite and >= 0");
  if (family != Family::constant && !(std::isfinite(length) && length > 0.0)) {
    throw ConfigError("kernel.length", "must be finite and > 0");
  }
}

double eval_K(const KernelSpec& spec, Point x, Point y) {
  check_dims(x, y, "eval_K");
  return spec(x, y);
}

// ---------------------------------------------------------------------------
// Interaction drift

DriftSpec DriftSpec::zero() { return {}; }

DriftSpec DriftSpec::saturating_attraction(double speed, double length) {
  DriftSpec d;
  d.family = Family::saturating_attraction;
  d.speed = speed;
  d.length = length;
  return d;
}

DriftSpec DriftSpec::state_modulated(double speed, double length,
                                     std::array<std::array<double, 3>, 3> weights) {
  DriftSpec d = saturating_attraction(speed, length);
  d.family = Family::state_modulated;
  d.weights = weights;
  return d;
}

double DriftSpec::weight(EpidemicState e, EpidemicState f) const {
  switch (family) {
    case Family::zero: return 0.0;
    case Family::saturating_attraction: return 1.0;
    case Family::state_modulated: return weights[code(e)][code(f)];
  }
  return 0.0;
}

double DriftSpec::radial_factor(double d2) const {
  if (family == Family::zero) return 0.0;
  return (speed / length) / (1.0 + d2 / (length * length));
}

bool DriftSpec::state_independent() const {
  if (family != Family::state_modulated) return true;
  for (const auto& row : weights)
    for (double w : row)
      if (w != weights[0][0]) return false;
  return true;
}

double DriftSpec::bound() const {
  if (family == Family::zero) return 0.0;
  double wmax = 1.0;
  if (family == Family::state_modulated) {
    wmax = 0.0;
    for (const auto& row : weights)
      for (double w : row) wmax = std::max(wmax, std::abs(w));
  }
  return 0.5 * speed * wmax;
}

double DriftSpec::lipschitz() const {
  if (family == Family::zero) return 0.0;
  return 2.0 * bound() / length;
}

void DriftSpec::validate() const {
  if (family == Family::zero) return;
  if (!finite_nonneg(speed)) throw ConfigError("drift.speed", "must be finite and >= 0");
  if (!(std::isfinite(length) && length > 0.0)) {
    throw ConfigError("drift.length", "must be finite and > 0");
  }
  for (const auto& row : weights)
    for (double w : row)
      if (!std::isfinite(w)) throw ConfigError("drift.weights", "must be finite");
}

void eval_V(const DriftSpec& spec, Point x, EpidemicState e, Point y, EpidemicState f,
            std::span<double> out) {
  check_dims(x, y, "eval_V");
  if (out.size() != x.size()) throw UsageError("eval_V: output has wrong dimension");
  const double c = spec.weight(e, f) * spec.radial_factor(dist2(x, y));
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = c * (y[k] - x[k]);
}

std::vector<double> eval_V(const DriftSpec& spec, Point x, EpidemicState e, Point y,
                           EpidemicState f) {
  std::vector<double> out(x.size(), 0.0);
  eval_V(spec, x, e, y, f, out);
  return out;
}

std::vector<double> mean_field_drift(const DriftSpec& spec, Point x, EpidemicState e,
                                     const MarkedCloud& measure) {
  if (static_cast<int>(x.size()) != measure.dim) {
    throw UsageError("mean_field_drift: dimension mismatch");
  }
  std::vector<double> acc(x.size(), 0.0);
  std::vector<double> v(x.size(), 0.0);
  for (std::size_t j = 0; j < measure.size(); ++j) {
    eval_V(spec, x, e, measure.point(j), measure.states[j], v);
    for (std::size_t k = 0; k < x.size(); ++k) acc[k] += measure.weights[j] * v[k];
  }
  return acc;
}

double mean_field_infection(const KernelSpec& spec, Point x, const Cloud& infected) {
  if (infected.size() == 0) return 0.0;
  if (static_cast<int>(x.size()) != infected.dim) {
    throw UsageError("mean_field_infection: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < infected.size(); ++j) {
    acc += infected.weights[j] * spec(x, infected.point(j));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Diffusion

DiffusionSpec DiffusionSpec::constant(std::array<double, 3> sigma) {
  DiffusionSpec d;
  d.base = sigma;
  return d;
}

DiffusionSpec DiffusionSpec::smooth_bounded(std::array<double, 3> base,
                                            std::array<double, 3> amplitude,
                                            std::array<double, 3> length) {
  DiffusionSpec d;
  d.family = Family::smooth_bounded;
  d.base = base;
  d.amplitude = amplitude;
  d.length = length;
  return d;
}

double DiffusionSpec::sigma_r2(double r2, EpidemicState e) const {
  const int i = code(e);
  if (family == Family::constant) return base[i];
  return base[i] + amplitude[i] * std::exp(-0.5 * r2 / (length[i] * length[i]));
}

double DiffusionSpec::sigma(Point x, EpidemicState e) const {
  if (family == Family::constant) return base[code(e)];
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return sigma_r2(r2, e);
}

double DiffusionSpec::bound() const {
  double b = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double amp = family == Family::constant ? 0.0 : std::max(0.0, amplitude[i]);
    b = std::max(b, base[i] + amp);
  }
  return b;
}

double DiffusionSpec::ellipticity() const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double amp = family == Family::constant ? 0.0 : std::min(0.0, amplitude[i]);
    lo = std::min(lo, base[i] + amp);
  }
  return lo * lo;
}

double DiffusionSpec::lipschitz() const {
  if (family == Family::constant) return 0.0;
  double l = 0.0;
  for (int i = 0; i < 3; ++i) {
    l = std::max(l, std::abs(amplitude[i]) * std::exp(-0.5) / length[i]);
  }
  return l;
}

void DiffusionSpec::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!finite_nonneg(base[i])) throw ConfigError("diffusion.base", "must be finite and >= 0");
    if (family == Family::smooth_bounded) {
      if (!std::isfinite(amplitude[i])) {
        throw ConfigError("diffusion.amplitude", "must be finite");
      }
      if (!(std::isfinite(length[i]) && length[i] > 0.0)) {
        throw ConfigError("diffusion.length", "must be finite and > 0");
      }
      if (base[i] + std::min(0.0, amplitude[i]) < 0.0) {
        throw ConfigError("diffusion.amplitude", "base + amplitude must stay >= 0");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Initial law

bool GaussianComponent::atom() const {
  return std::all_of(covariance.begin(), covariance.end(), [](double v) { return v == 0.0; });
}

InitialLawSpec InitialLawSpec::standard(int dim, std::array<double, 3> probabilities) {
  InitialLawSpec s;
  s.state_probabilities = probabilities;
  GaussianComponent c;
  c.mean.assign(static_cast<std::size_t>(dim), 0.0);
  c.covariance.assign(static_cast<std::size_t>(dim * dim), 0.0);
  for (int k = 0; k < dim; ++k) c.covariance[static_cast<std::size_t>(k * dim + k)] = 1.0;
  for (auto& mix : s.spatial) mix = {c};
  return s;
}

double InitialLawSpec::mass_1d(EpidemicState e, double a, double b) const {
  const double p = state_probabilities[code(e)];
  if (p == 0.0) return 0.0;
  double m = 0.0;
  for (const auto& c : spatial[code(e)]) {
    if (c.atom()) {
      if (a <= c.mean[0] && c.mean[0] < b) m += c.weight;
      continue;
    }
    const double sd = std::sqrt(c.covariance[0]);
    const double za = (a - c.mean[0]) / (sd * std::numbers::sqrt2);
    const double zb = (b - c.mean[0]) / (sd * std::numbers::sqrt2);
    // Differences of erfc in the upper tail, erf otherwise, to keep precision.
    double q;
    if (za > 0.0) {
      q = 0.5 * (std::erfc(za) - std::erfc(zb));
    } else if (zb < 0.0) {
      q = 0.5 * (std::erfc(-zb) - std::erfc(-za));
    } else {
      q = 0.5 * (std::erf(zb) - std::erf(za));
    }
    m += c.weight * q;
  }
  return p * m;
}

double InitialLawSpec::density_1d(EpidemicState e, double x) const {
  const double p = state_probabilities[code(e)];
  double f = 0.0;
  for (const auto& c : spatial[code(e)]) {
    if (c.atom()) continue;
    const double var = c.covariance[0];
    const double u = x - c.mean[0];
    f += c.weight * std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * std::numbers::pi * var);
  }
  return p * f;
}

std::array<double, 2> InitialLawSpec::support_1d(double k) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int e = 0; e < 3; ++e) {
    if (state_probabilities[e] == 0.0) continue;
    for (const auto& c : spatial[e]) {
      if (c.weight == 0.0) continue;
      const double sd = std::sqrt(c.covariance[0]);
      lo = std::min(lo, c.mean[0] - k * sd);
      hi = std::max(hi, c.mean[0] + k * sd);
    }
  }
  return {lo, hi};
}

void InitialLawSpec::validate(int dim) const {
  double total = 0.0;
  for (double p : state_probabilities) {
    if (!finite_nonneg(p)) {
      throw ConfigError("initial.state_probabilities", "entries must be finite and >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("initial.state_probabilities",
                      "must sum to 1 (got " + std::to_string(total) + ")");
  }
  for (int e = 0; e < 3; ++e) {
    const std::string path = std::string("initial.spatial.") + std::string(to_string(kStates[e]));
    if (spatial[e].empty()) throw ConfigError(path, "mixture has no components");
    double wsum = 0.0;
    for (const auto& c : spatial[e]) {
      if (!finite_nonneg(c.weight)) throw ConfigError(path, "weights must be >= 0");
      wsum += c.weight;
      if (static_cast<int>(c.mean.size()) != dim ||
          static_cast<int>(c.covariance.size()) != dim * dim) {
        throw ConfigError(path, "component shape does not match dimension");
      }
      for (double v : c.mean)
        if (!std::isfinite(v)) throw ConfigError(path, "mean must be finite");
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          if (c.covariance[static_cast<std::size_t>(a * dim + b)] !=
              c.covariance[static_cast<std::size_t>(b * dim + a)]) {
            throw ConfigError(path, "covariance must be symmetric");
          }
      if (!c.atom() && cholesky(c.covariance, dim).empty()) {
        throw ConfigError(path, "covariance must be positive definite or zero");
      }
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError(path, "mixture weights must sum to 1");
  }
}

void ModelConfig::validate() const {
  if (dim < 1) throw ConfigError("dimension", "must be >= 1");
  if (!finite_nonneg(gamma)) throw ConfigError("gamma", "must be finite and >= 0");
  kernel.validate();
  drift.validate();
  diffusion.validate();
  initial.validate(dim);
}

std::vector<double> cholesky(std::span<const double> a, int dim) {
  const auto n = static_cast<std::size_t>(dim);
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return {};
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

ParticleEnsemble sample_initial(const InitialLawSpec& spec, int dim, std::size_t n,
                                RngStream& rng) {
  if (n == 0) throw UsageError("sample_initial: n must be >= 1");
  ParticleEnsemble ens(dim, n);
  std::array<std::vector<std::vector<double>>, 3> factors;
  for (int e = 0; e < 3; ++e) {
    for (const auto& c : spec.spatial[e]) {
      factors[e].push_back(c.atom() ? c.covariance : cholesky(c.covariance, dim));
    }
  }
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int e = 0;
    double acc = spec.state_probabilities[0];
    while (e < 2 && (u >= acc || spec.state_probabilities[e] == 0.0)) {
      ++e;
      acc += spec.state_probabilities[e];
    }
    ens.states[i] = kStates[e];

    const auto& mix = spec.spatial[e];
    std::size_t comp = 0;
    if (mix.size() > 1) {
      const double v = rng.uniform();
      double cw = mix[0].weight;
      while (comp + 1 < mix.size() && v >= cw) cw += mix[++comp].weight;
    }
    for (auto& zk : z) zk = rng.normal();
    const auto& L = factors[e][comp];
    auto x = ens.position(i);
    for (std::size_t a = 0; a < d; ++a) {
      double s = mix[comp].mean[a];
      for (std::size_t b = 0; b <= a; ++b) s += L[a * d + b] * z[b];
      x[a] = s;
    }
  }
  return ens;
}

}  // namespace mfsir
