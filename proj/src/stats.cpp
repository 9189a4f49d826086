// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mfsir/error.hpp"

namespace mfsir {
namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

void RateTable::validate() const {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && rows[k].n <= rows[k - 1].n) {
      throw UsageError("RateTable: N must be strictly increasing");
    }
    if (!(rows[k].se > 0.0)) throw UsageError("RateTable: standard errors must be positive");
  }
}

FitResult fit_power_law(std::span<const double> n, std::span<const double> y) {
  if (n.size() != y.size() || n.size() < 3) {
    throw UsageError("fit_power_law: need at least 3 (N, mean) pairs");
  }
  const auto m = static_cast<double>(n.size());
  std::vector<double> lx(n.size()), ly(n.size());
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (!(y[k] > 0.0) || !(n[k] > 0.0)) {
      throw UsageError("fit_power_law: means and N must be positive");
    }
    lx[k] = std::log(n[k]);
    ly[k] = std::log(y[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw UsageError("fit_power_law: N values must not all coincide");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double r = ly[k] - (f.intercept + f.slope * lx[k]);
    ssr += r * r;
  }
  f.slope_se = std::sqrt(ssr / (m - 2.0) / sxx);
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  return f;
}

FitResult fit_power_law(const RateTable& table) {
  std::vector<double> n, y;
  for (const auto& r : table.rows) {
    n.push_back(static_cast<double>(r.n));
    y.push_back(r.mean_w1);
  }
  return fit_power_law(n, y);
}

bool TestVerdict::reject(double alpha) const {
  if (method == "normality_screen") {
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    return p_value < alpha || std::abs(skew_z) > z || std::abs(kurtosis_z) > z;
  }
  return p_value < alpha;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestVerdict ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 30 || b.size() < 30) throw UsageError("ks_two_sample: need >= 30 samples each");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  TestVerdict t;
  t.method = "ks_two_sample";
  t.statistic = d;
  t.n_a = x.size();
  t.n_b = y.size();
  const double ne = std::sqrt(n * m / (n + m));
  t.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return t;
}

TestVerdict normality_screen(std::span<const double> samples) {
  if (samples.size() < 100) throw UsageError("normality_screen: need >= 100 samples");
  const Summary s = summarize(samples);
  if (!(s.variance > 0.0)) throw UsageError("normality_screen: zero variance");
  const auto n = static_cast<double>(samples.size());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double u = v - s.mean;
    m2 += u * u;
    m3 += u * u * u;
    m4 += u * u * u * u;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  std::vector<double> z(samples.begin(), samples.end());
  std::sort(z.begin(), z.end());
  const double sd = std::sqrt(s.variance);
  double d = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double f = normal_cdf((z[k] - s.mean) / sd);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  TestVerdict t;
  t.method = "normality_screen";
  t.statistic = d;
  t.n_a = samples.size();
  t.approximate = true;
  const double rn = std::sqrt(n);
  t.p_value = kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
  t.skew_z = (m3 / std::pow(m2, 1.5)) / std::sqrt(6.0 / n);
  t.kurtosis_z = (m4 / (m2 * m2) - 3.0) / std::sqrt(24.0 / n);
  return t;
}

TestVerdict chi_square_homogeneity(const std::vector<std::vector<double>>& counts) {
  if (counts.size() < 2) throw UsageError("chi_square_homogeneity: need >= 2 samples");
  const std::size_t cols = counts[0].size();
  for (const auto& r : counts) {
    if (r.size() != cols) throw UsageError("chi_square_homogeneity: ragged count table");
  }
  std::vector<double> col(cols, 0.0), row(counts.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      col[j] += counts[i][j];
      row[i] += counts[i][j];
      total += counts[i][j];
    }
  }
  std::size_t used = 0;
  for (double c : col) used += c > 0.0;
  if (used < 2 || total <= 0.0) throw UsageError("chi_square_homogeneity: degenerate table");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (col[j] <= 0.0) continue;
      const double e = row[i] * col[j] / total;
      stat += (counts[i][j] - e) * (counts[i][j] - e) / e;
    }
  }
  const double df = static_cast<double>((counts.size() - 1) * (used - 1));
  TestVerdict t;
  t.method = "chi_square_homogeneity";
  t.statistic = stat;
  t.p_value = boost::math::gamma_q(0.5 * df, 0.5 * stat);
  t.n_a = static_cast<std::size_t>(row[0]);
  t.n_b = static_cast<std::size_t>(row[1]);
  return t;
}

Summary summarize(std::span<const double> x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.variance = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
  s.se = std::sqrt(s.variance / static_cast<double>(x.size()));
  return s;
}

double covariance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.size() < 2) throw UsageError("covariance: need paired samples");
  const auto n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    mu += u[k];
    mv += v[k];
  }
  mu /= n;
  mv /= n;
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - mu) * (v[k] - mv);
  return s / (n - 1.0);
}

CovEstimate cov_with_ci(std::span<const double> u, std::span<const double> v, int n_boot,
                        RngStream& rng) {
  if (u.size() != v.size() || u.size() < 100) {
    throw UsageError("cov_with_ci: need >= 100 paired samples");
  }
  if (n_boot < 10) throw UsageError("cov_with_ci: need >= 10 bootstrap draws");
  CovEstimate out;
  out.estimate = covariance(u, v);
  const std::size_t n = u.size();
  std::vector<double> bu(n), bv(n), stats(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    for (std::size_t k = 0; k < n; ++k) {
      auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      idx = std::min(idx, n - 1);
      bu[k] = u[idx];
      bv[k] = v[idx];
    }
    stats[static_cast<std::size_t>(b)] = covariance(bu, bv);
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  out.lower = quantile(0.025);
  out.upper = quantile(0.975);
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace mfsir
