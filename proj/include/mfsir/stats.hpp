// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfsir/rng.hpp"

namespace mfsir {

struct RateRow {
  std::size_t n = 0;
  std::size_t reps = 0;
  double mean_w1 = 0.0;
  double se = 0.0;
};

/// Mean W1 distance to the limit as a function of N.
struct RateTable {
  int dim = 1;
  std::vector<RateRow> rows;
  void validate() const;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(mean) on log(N).
FitResult fit_power_law(const RateTable& table);
FitResult fit_power_law(std::span<const double> n, std::span<const double> y);

struct TestVerdict {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool approximate = false;  // p-value ignores estimated parameters
  double skew_z = 0.0;       // normality screen only
  double kurtosis_z = 0.0;   // normality screen only

  /// True when the null is rejected at level alpha.
  bool reject(double alpha) const;
};

/// Asymptotic Kolmogorov survival function Q(l) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2).
double kolmogorov_q(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction of the scale).
TestVerdict ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS against Normal(sample mean, sample variance), flagged
/// approximate, plus skewness and excess-kurtosis z-scores.
TestVerdict normality_screen(std::span<const double> samples);

/// Pearson chi-square homogeneity test of count rows over shared categories
/// (empty categories dropped).
TestVerdict chi_square_homogeneity(const std::vector<std::vector<double>>& counts);

struct CovEstimate {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Sample covariance with a percentile bootstrap 95% interval.
CovEstimate cov_with_ci(std::span<const double> u, std::span<const double> v, int n_boot,
                        RngStream& rng);

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se = 0.0;        // standard error of the mean
  std::size_t n = 0;
};
Summary summarize(std::span<const double> x);
double covariance(std::span<const double> u, std::span<const double> v);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace mfsir
