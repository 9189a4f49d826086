// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

#include "mfsir/error.hpp"

namespace mfsir {
namespace {

// Integral over [0, len] of |a + (b - a) s / len|.
double abs_linear(double a, double b, double len) {
  if ((a >= 0.0) == (b >= 0.0)) return 0.5 * (std::abs(a) + std::abs(b)) * len;
  return 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b)) * len;
}

void require_1d(const Cloud& c, const char* op) {
  if (c.dim != 1) throw UsageError(std::string(op) + ": clouds must be 1-D");
}

// W1 between two sorted uniform samples (weights 1/n and 1/m).
double w1_sorted_uniform(const double* xa, std::size_t n, const double* xb, std::size_t m) {
  if (n == 0 || m == 0) throw UsageError("w1: empty cloud");
  const double wa = 1.0 / static_cast<double>(n);
  const double wb = 1.0 / static_cast<double>(m);
  std::size_t i = 0;
  std::size_t j = 0;
  double fa = 0.0;
  double fb = 0.0;
  double x = std::min(xa[0], xb[0]);
  double acc = 0.0;
  while (i < n || j < m) {
    double next;
    if (j >= m || (i < n && xa[i] <= xb[j])) {
      next = xa[i];
      acc += std::abs(fa - fb) * (next - x);
      fa = static_cast<double>(++i) * wa;
    } else {
      next = xb[j];
      acc += std::abs(fa - fb) * (next - x);
      fb = static_cast<double>(++j) * wb;
    }
    x = next;
  }
  return acc;
}

}  // namespace

double pair(const Cloud& cloud, const TestFunction& phi) {
  double s = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) s += cloud.weights[i] * phi.value(cloud.point(i));
  return s;
}

double pair(const MarkedCloud& measure, const StateTestFunction& phi) {
  double s = 0.0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    s += measure.weights[i] * phi[code(measure.states[i])].value(measure.point(i));
  }
  return s;
}

double w1_1d(const Cloud& a, const Cloud& b) {
  require_1d(a, "w1_1d");
  require_1d(b, "w1_1d");
  const double ma = a.mass();
  const double mb = b.mass();
  if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) {
    throw UsageError("w1_1d: masses differ (" + std::to_string(ma) + " vs " +
                     std::to_string(mb) + ")");
  }
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) atoms.emplace_back(a.positions[i], a.weights[i]);
  for (std::size_t i = 0; i < b.size(); ++i) atoms.emplace_back(b.positions[i], -b.weights[i]);
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& p, const auto& q) { return p.first < q.first; });
  double cum = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    cum += atoms[k].second;
    acc += std::abs(cum) * (atoms[k + 1].first - atoms[k].first);
  }
  return acc;
}

double w1_1d(std::span<const double> xa, std::span<const double> xb) {
  std::vector<double> a(xa.begin(), xa.end());
  std::vector<double> b(xb.begin(), xb.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return w1_sorted_uniform(a.data(), a.size(), b.data(), b.size());
}

double w1_1d_to_density(const Cloud& cloud, const Grid1D& grid, std::span<const double> masses) {
  require_1d(cloud, "w1_1d_to_density");
  const auto g = static_cast<std::size_t>(grid.cells);
  if (masses.size() != g) throw UsageError("w1_1d_to_density: masses do not match the grid");
  const double mc = cloud.mass();
  const double md = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (std::abs(mc - md) > 1e-3) {
    throw UsageError("w1_1d_to_density: masses differ by " + std::to_string(std::abs(mc - md)));
  }
  const double scale = md > 0.0 ? mc / md : 0.0;

  // Density CDF knots.
  std::vector<double> kx(g + 2);
  std::vector<double> kf(g + 2);
  kx[0] = grid.x_min;
  kf[0] = 0.0;
  double below = 0.0;
  for (std::size_t c = 0; c < g; ++c) {
    const double m = masses[c] * scale;
    kx[c + 1] = grid.center(static_cast<int>(c));
    kf[c + 1] = below + 0.5 * m;
    below += m;
  }
  kx[g + 1] = grid.x_max;
  kf[g + 1] = mc;

  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    atoms.emplace_back(cloud.positions[i], cloud.weights[i]);
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& p, const auto& q) { return p.first < q.first; });

  // F outside [x_min, x_max] is 0 or the total.
  auto density_cdf = [&](double x, std::size_t& seg) {
    if (x <= kx[0]) return 0.0;
    if (x >= kx[g + 1]) return mc;
    while (seg + 1 < kx.size() - 1 && kx[seg + 1] <= x) ++seg;
    const double w = (x - kx[seg]) / (kx[seg + 1] - kx[seg]);
    return kf[seg] + w * (kf[seg + 1] - kf[seg]);
  };

  std::vector<double> pts;
  pts.reserve(kx.size() + atoms.size());
  std::size_t ia = 0;
  std::size_t ik = 0;
  while (ia < atoms.size() || ik < kx.size()) {
    if (ik >= kx.size() || (ia < atoms.size() && atoms[ia].first < kx[ik])) {
      pts.push_back(atoms[ia++].first);
    } else {
      pts.push_back(kx[ik++]);
    }
  }

  double acc = 0.0;
  double cum = 0.0;
  std::size_t seg = 0;
  std::size_t next_atom = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double p = pts[k];
    const double q = pts[k + 1];
    while (next_atom < atoms.size() && atoms[next_atom].first <= p) cum += atoms[next_atom++].second;
    if (q <= p) continue;
    const double fp = density_cdf(p, seg);
    std::size_t seg_q = seg;
    const double fq = density_cdf(q, seg_q);
    acc += abs_linear(cum - fp, cum - fq, q - p);
  }
  return acc;
}

double w1_exact_assignment(const Cloud& a, const Cloud& b) {
  const std::size_t n = a.size();
  if (n != b.size()) throw UsageError("w1_exact_assignment: clouds differ in size");
  if (n > 2048) throw UsageError("w1_exact_assignment: size cap of 2048 exceeded");
  if (a.dim != b.dim) throw UsageError("w1_exact_assignment: dimension mismatch");
  if (n == 0) return 0.0;
  const int d = a.dim;
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double u = a.positions[i * d + k] - b.positions[j * d + k];
        s += u * u;
      }
      cost[i * n + j] = std::sqrt(s);
    }
  }
  // Shortest augmenting paths with potentials; rows and columns 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total / static_cast<double>(n);
}

std::vector<double> random_directions(int dim, int n_proj, RngStream& rng) {
  if (dim < 1 || n_proj < 1) throw UsageError("random_directions: need dim, n_proj >= 1");
  std::vector<double> dirs(static_cast<std::size_t>(dim * n_proj));
  for (int p = 0; p < n_proj; ++p) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double z = rng.normal();
        dirs[static_cast<std::size_t>(p * dim + k)] = z;
        norm += z * z;
      }
    } while (norm < 1e-24);
    norm = std::sqrt(norm);
    for (int k = 0; k < dim; ++k) dirs[static_cast<std::size_t>(p * dim + k)] /= norm;
  }
  return dirs;
}

namespace {

Cloud project(const Cloud& c, const double* dir) {
  Cloud out;
  out.dim = 1;
  out.weights = c.weights;
  out.positions.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < c.dim; ++k) s += c.positions[i * c.dim + k] * dir[k];
    out.positions[i] = s;
  }
  return out;
}

}  // namespace

double sliced_scale(int dim) {
  const double d = dim;
  return std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
}

double sliced_w1(const Cloud& a, const Cloud& b, int n_proj, RngStream& rng) {
  if (a.dim != b.dim) throw UsageError("sliced_w1: dimension mismatch");
  if (a.dim < 2) throw UsageError("sliced_w1: needs d >= 2");
  const std::vector<double> dirs = random_directions(a.dim, n_proj, rng);
  double acc = 0.0;
  for (int p = 0; p < n_proj; ++p) {
    const double* dir = dirs.data() + static_cast<std::ptrdiff_t>(p) * a.dim;
    acc += w1_1d(project(a, dir), project(b, dir));
  }
  return sliced_scale(a.dim) * acc / n_proj;
}

SlicedReference::SlicedReference(const Cloud& reference, std::vector<double> directions)
    : dim_(reference.dim), dirs_(std::move(directions)) {
  if (dirs_.size() % static_cast<std::size_t>(dim_) != 0 || dirs_.empty()) {
    throw UsageError("SlicedReference: directions do not match the dimension");
  }
  if (reference.size() == 0) throw UsageError("SlicedReference: empty reference");
  n_proj_ = static_cast<int>(dirs_.size() / static_cast<std::size_t>(dim_));
  for (double w : reference.weights) {
    if (w != reference.weights[0]) throw UsageError("SlicedReference: weights must be uniform");
  }
  ref_x_.resize(static_cast<std::size_t>(n_proj_));
  for (int p = 0; p < n_proj_; ++p) {
    Cloud pr = project(reference, dirs_.data() + static_cast<std::ptrdiff_t>(p) * dim_);
    std::sort(pr.positions.begin(), pr.positions.end());
    ref_x_[static_cast<std::size_t>(p)] = std::move(pr.positions);
  }
}

double SlicedReference::distance(const Cloud& cloud) const {
  if (cloud.dim != dim_) throw UsageError("SlicedReference: dimension mismatch");
  if (cloud.size() == 0) throw UsageError("SlicedReference: empty cloud");
  for (double w : cloud.weights) {
    if (w != cloud.weights[0]) throw UsageError("SlicedReference: weights must be uniform");
  }
  std::vector<double> proj(cloud.size());
  double acc = 0.0;
  for (int p = 0; p < n_proj_; ++p) {
    const double* dir = dirs_.data() + static_cast<std::ptrdiff_t>(p) * dim_;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) s += cloud.positions[i * dim_ + k] * dir[k];
      proj[i] = s;
    }
    std::sort(proj.begin(), proj.end());
    const auto& ref = ref_x_[static_cast<std::size_t>(p)];
    acc += w1_sorted_uniform(proj.data(), proj.size(), ref.data(), ref.size());
  }
  return sliced_scale(dim_) * acc / n_proj_;
}

namespace {

// Sum over |k| = order of |D^k phi(x)|^2.
double derivative_energy(const TestFunction& phi, const double* x, int dim, int order) {
  const Point px(x, static_cast<std::size_t>(dim));
  if (order == 0) {
    const double v = phi.value(px);
    return v * v;
  }
  if (dim == 1) {
    const double x0 = x[0];
    if (order == 1) {
      const double g = phi.derivative(x0);
      return g * g;
    }
    if (order == 2) {
      const double l = phi.second_derivative(x0);
      return l * l;
    }
    const double dlt = 1e-4;
    const double t = (phi.second_derivative(x0 + dlt) - phi.second_derivative(x0 - dlt)) / (2 * dlt);
    return t * t;
  }
  double g[2];
  if (order == 1) {
    phi.gradient(px, std::span<double>(g, 2));
    return g[0] * g[0] + g[1] * g[1];
  }
  // dim == 2: differences of the analytic gradient.
  auto grad_at = [&](double dx, double dy, double* out) {
    const double y[2] = {x[0] + dx, x[1] + dy};
    phi.gradient(Point(y, 2), std::span<double>(out, 2));
  };
  if (order == 2) {
    const double dlt = 1e-4;
    double gp[2], gm[2], hp[2], hm[2];
    grad_at(dlt, 0, gp);
    grad_at(-dlt, 0, gm);
    grad_at(0, dlt, hp);
    grad_at(0, -dlt, hm);
    const double d11 = (gp[0] - gm[0]) / (2 * dlt);
    const double d12 = (hp[0] - hm[0]) / (2 * dlt);
    const double d22 = (hp[1] - hm[1]) / (2 * dlt);
    return d11 * d11 + d12 * d12 + d22 * d22;
  }
  const double dlt = 1e-3;
  double g0[2], gp[2], gm[2], hp[2], hm[2];
  grad_at(0, 0, g0);
  grad_at(dlt, 0, gp);
  grad_at(-dlt, 0, gm);
  grad_at(0, dlt, hp);
  grad_at(0, -dlt, hm);
  const double inv = 1.0 / (dlt * dlt);
  const double d111 = (gp[0] - 2 * g0[0] + gm[0]) * inv;
  const double d112 = (gp[1] - 2 * g0[1] + gm[1]) * inv;
  const double d122 = (hp[0] - 2 * g0[0] + hm[0]) * inv;
  const double d222 = (hp[1] - 2 * g0[1] + hm[1]) * inv;
  return d111 * d111 + d112 * d112 + d122 * d122 + d222 * d222;
}

}  // namespace

SobolevNorm weighted_sobolev_norm(const TestFunction& phi, const WeightedNormSpec& spec,
                                  int dim) {
  if (spec.j < 0 || spec.j > 3) throw UsageError("weighted_sobolev_norm: need 0 <= j <= 3");
  if (!(spec.alpha >= 0.0)) throw UsageError("weighted_sobolev_norm: need alpha >= 0");
  if (dim < 1 || dim > 2) throw UsageError("weighted_sobolev_norm: supports d <= 2");
  if (spec.points < 2 || !(spec.half_width > 0.0)) {
    throw UsageError("weighted_sobolev_norm: bad quadrature grid");
  }
  SobolevNorm out;
  if (phi.is_zero()) return out;
  const double L = spec.half_width;
  const double step = 2.0 * L / spec.points;
  const double cell = dim == 1 ? step : step * step;
  double total = 0.0;
  double outer = 0.0;
  const int ny = dim == 1 ? 1 : spec.points;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < spec.points; ++ix) {
      double x[2] = {-L + (ix + 0.5) * step, dim == 2 ? -L + (iy + 0.5) * step : 0.0};
      const double r2 = x[0] * x[0] + x[1] * x[1];
      const double w = std::pow(1.0 + r2, -spec.alpha);
      double e = 0.0;
      for (int k = 0; k <= spec.j; ++k) e += derivative_energy(phi, x, dim, k);
      const double v = e * w * cell;
      total += v;
      if (std::max(std::abs(x[0]), std::abs(x[1])) > 0.5 * L) outer += v;
    }
  }
  out.value = std::sqrt(total);
  out.integrable = !(outer > 0.01 * total);
  return out;
}

}  // namespace mfsir
