// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

// Built with -O3 -ffast-math so the inner loops vectorize (including exp).

#include "mfsir/pair_sums.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mfsir/error.hpp"

namespace mfsir {
namespace {

// Upper-triangle sweep using V(x_i, y) = -V(y, x_i) when weights are uniform.
template <int D>
void drift_uniform(const double* __restrict x, double* __restrict acc, std::size_t n,
                   double coef, double inv_l2) {
  for (std::size_t i = 0; i < n; ++i) {
    double xi[D];
    double ai[D];
    for (int k = 0; k < D; ++k) {
      xi[k] = x[k * n + i];
      ai[k] = 0.0;
    }
    double* __restrict a[D];
    const double* __restrict xk[D];
    for (int k = 0; k < D; ++k) {
      a[k] = acc + k * n;
      xk[k] = x + k * n;
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      double u[D];
      double r2 = 0.0;
      for (int k = 0; k < D; ++k) {
        u[k] = xk[k][j] - xi[k];
        r2 += u[k] * u[k];
      }
      const double c = coef / (1.0 + r2 * inv_l2);
      for (int k = 0; k < D; ++k) {
        const double t = c * u[k];
        ai[k] += t;
        a[k][j] -= t;
      }
    }
    for (int k = 0; k < D; ++k) a[k][i] += ai[k];
  }
}

void drift_uniform_dyn(const double* x, double* acc, std::size_t n, int d, double coef,
                       double inv_l2) {
  std::vector<double> u(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        u[k] = x[k * n + j] - x[k * n + i];
        r2 += u[k] * u[k];
      }
      const double c = coef / (1.0 + r2 * inv_l2);
      for (int k = 0; k < d; ++k) {
        acc[k * n + i] += c * u[k];
        acc[k * n + j] -= c * u[k];
      }
    }
  }
}

// General weights: i receives w[e_i][e_j] * t and j receives -w[e_j][e_i] * t.
void drift_weighted(const double* x, const std::uint8_t* st, double* acc, std::size_t n, int d,
                    const std::array<double, 9>& w, double coef, double inv_l2) {
  std::vector<double> u(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const int ei = st[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const int ej = st[j];
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        u[k] = x[k * n + j] - x[k * n + i];
        r2 += u[k] * u[k];
      }
      const double c = coef / (1.0 + r2 * inv_l2);
      const double wf = w[ei * 3 + ej] * c;
      const double wr = w[ej * 3 + ei] * c;
      for (int k = 0; k < d; ++k) {
        acc[k * n + i] += wf * u[k];
        acc[k * n + j] -= wr * u[k];
      }
    }
  }
}

template <int D, class Profile>
double sum_profile(const double* __restrict src, std::size_t m, const double* xi, Profile f) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double r2 = 0.0;
    for (int k = 0; k < D; ++k) {
      const double u = src[k * m + j] - xi[k];
      r2 += u * u;
    }
    s += f(r2);
  }
  return s;
}

template <class Profile>
double sum_profile_dyn(const double* src, std::size_t m, const double* xi, int d, Profile f) {
  switch (d) {
    case 1: return sum_profile<1>(src, m, xi, f);
    case 2: return sum_profile<2>(src, m, xi, f);
    case 3: return sum_profile<3>(src, m, xi, f);
    default: break;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double u = src[k * m + j] - xi[k];
      r2 += u * u;
    }
    s += f(r2);
  }
  return s;
}

struct GaussProfile {
  double h;
  double operator()(double r2) const { return std::exp(-h * r2); }
};

struct BumpProfile {
  double inv_r2;
  double operator()(double r2) const {
    const double t = 1.0 - r2 * inv_r2;
    const double ts = t > 1e-300 ? t : 1e-300;
    const double v = std::exp(1.0 - 1.0 / ts);
    return t > 0.0 ? v : 0.0;
  }
};

}  // namespace

void PairSums::drift(const DriftSpec& spec, const ParticleEnsemble& ens, std::span<double> out) {
  const std::size_t n = ens.size();
  const int d = ens.dim;
  const auto nd = n * static_cast<std::size_t>(d);
  if (out.size() != nd) throw UsageError("PairSums::drift: output has wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  if (spec.family == DriftSpec::Family::zero || n < 2 || spec.speed == 0.0) return;

  soa_.resize(nd);
  acc_.assign(nd, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) soa_[k * n + i] = ens.positions[i * d + k];

  const double inv_l2 = 1.0 / (spec.length * spec.length);
  const double base = spec.speed / spec.length;
  if (spec.state_independent()) {
    const double coef = base * spec.weight(EpidemicState::S, EpidemicState::S);
    switch (d) {
      case 1: drift_uniform<1>(soa_.data(), acc_.data(), n, coef, inv_l2); break;
      case 2: drift_uniform<2>(soa_.data(), acc_.data(), n, coef, inv_l2); break;
      case 3: drift_uniform<3>(soa_.data(), acc_.data(), n, coef, inv_l2); break;
      default: drift_uniform_dyn(soa_.data(), acc_.data(), n, d, coef, inv_l2); break;
    }
  } else {
    std::array<double, 9> w{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) w[a * 3 + b] = spec.weights[a][b];
    drift_weighted(soa_.data(), reinterpret_cast<const std::uint8_t*>(ens.states.data()),
                   acc_.data(), n, d, w, base, inv_l2);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) out[i * d + k] = acc_[k * n + i] * inv_n;
}

void PairSums::infection(const KernelSpec& spec, const ParticleEnsemble& ens,
                         std::span<double> out, bool cell_list) {
  const std::size_t n = ens.size();
  if (out.size() != n) throw UsageError("PairSums::infection: output has wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  const int d = ens.dim;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::size_t n_inf = 0;
  for (EpidemicState e : ens.states) n_inf += e == EpidemicState::I;
  if (n_inf == 0 || spec.beta == 0.0) return;

  if (spec.family == KernelSpec::Family::constant) {
    const double rate = spec.beta * static_cast<double>(n_inf) * inv_n;
    for (std::size_t i = 0; i < n; ++i)
      if (ens.states[i] == EpidemicState::S) out[i] = rate;
    return;
  }
  if (cell_list && spec.family == KernelSpec::Family::bump) {
    infection_cells(spec, ens, out);
    return;
  }

  src_.resize(n_inf * static_cast<std::size_t>(d));
  std::size_t m = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (ens.states[j] != EpidemicState::I) continue;
    for (int k = 0; k < d; ++k) src_[k * n_inf + m] = ens.positions[j * d + k];
    ++m;
  }
  const double scale = spec.beta * inv_n;
  for (std::size_t i = 0; i < n; ++i) {
    if (ens.states[i] != EpidemicState::S) continue;
    const double* xi = ens.positions.data() + i * d;
    double s;
    if (spec.family == KernelSpec::Family::gaussian) {
      s = sum_profile_dyn(src_.data(), n_inf, xi, d,
                          GaussProfile{0.5 / (spec.length * spec.length)});
    } else {
      s = sum_profile_dyn(src_.data(), n_inf, xi, d,
                          BumpProfile{1.0 / (spec.length * spec.length)});
    }
    out[i] = scale * s;
  }
}

// Uniform grid with spacing r over the bounding box of the infected atoms;
// each susceptible visits the 3^d cells around its own.
void PairSums::infection_cells(const KernelSpec& spec, const ParticleEnsemble& ens,
                               std::span<double> out) {
  const std::size_t n = ens.size();
  const int d = ens.dim;
  const double r = spec.length;
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < n; ++j) {
    if (ens.states[j] != EpidemicState::I) continue;
    for (int k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], ens.positions[j * d + k]);
      hi[k] = std::max(hi[k], ens.positions[j * d + k]);
    }
  }
  std::vector<long> dims(d);
  double total = 1.0;
  for (int k = 0; k < d; ++k) {
    dims[k] = static_cast<long>((hi[k] - lo[k]) / r) + 1;
    total *= static_cast<double>(dims[k]);
  }
  if (total > 5e6) {
    infection(spec, ens, out, false);
    return;
  }
  const auto n_cells = static_cast<std::size_t>(total);

  auto cell_of = [&](const double* x, std::vector<long>& c) {
    for (int k = 0; k < d; ++k) c[k] = static_cast<long>(std::floor((x[k] - lo[k]) / r));
  };
  auto flat = [&](const std::vector<long>& c) {
    std::size_t f = 0;
    for (int k = 0; k < d; ++k) f = f * static_cast<std::size_t>(dims[k]) + c[k];
    return f;
  };

  // Counting sort of infected atoms by cell, stable in individual index.
  std::vector<long> c(d);
  cell_start_.assign(n_cells + 1, 0);
  cell_order_.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (ens.states[j] != EpidemicState::I) continue;
    cell_of(ens.positions.data() + j * d, c);
    ++cell_start_[flat(c) + 1];
    cell_order_.push_back(j);
  }
  for (std::size_t f = 0; f < n_cells; ++f) cell_start_[f + 1] += cell_start_[f];
  const std::size_t m = cell_order_.size();
  src_.resize(m * static_cast<std::size_t>(d));
  {
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t j : cell_order_) {
      cell_of(ens.positions.data() + j * d, c);
      const std::size_t slot = fill[flat(c)]++;
      for (int k = 0; k < d; ++k) src_[slot * d + k] = ens.positions[j * d + k];
    }
  }

  const double inv_r2 = 1.0 / (r * r);
  const double scale = spec.beta / static_cast<double>(n);
  const BumpProfile f{inv_r2};
  std::vector<long> nb(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (ens.states[i] != EpidemicState::S) continue;
    const double* xi = ens.positions.data() + i * d;
    cell_of(xi, c);
    bool outside = false;
    for (int k = 0; k < d; ++k) outside |= c[k] < -1 || c[k] > dims[k];
    if (outside) continue;
    double s = 0.0;
    long combos = 1;
    for (int k = 0; k < d; ++k) combos *= 3;
    for (long q = 0; q < combos; ++q) {
      long rem = q;
      bool ok = true;
      for (int k = d - 1; k >= 0; --k) {
        nb[k] = c[k] + (rem % 3) - 1;
        rem /= 3;
        ok &= nb[k] >= 0 && nb[k] < dims[k];
      }
      if (!ok) continue;
      const std::size_t fc = flat(nb);
      for (std::size_t slot = cell_start_[fc]; slot < cell_start_[fc + 1]; ++slot) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double u = src_[slot * d + k] - xi[k];
          r2 += u * u;
        }
        s += f(r2);
      }
    }
    out[i] = scale * s;
  }
}

void lag_convolve(const double* table, std::ptrdiff_t offset, const double* in, std::size_t n_in,
                  double* out, std::size_t n_out) {
  for (std::size_t r = 0; r < n_out; ++r) {
    const double* row = table + offset - static_cast<std::ptrdiff_t>(r);
    double s = 0.0;
    for (std::size_t c = 0; c < n_in; ++c) s += row[c] * in[c];
    out[r] = s;
  }
}

}  // namespace mfsir
