// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsir/grid.hpp"
#include "mfsir/model.hpp"
#include "mfsir/rng.hpp"
#include "mfsir/test_functions.hpp"

namespace mfsir {

/// sum_i w_i phi(x_i), ascending index order.
double pair(const Cloud& cloud, const TestFunction& phi);
/// Pairing on the product space: sum_i w_i phi_{e_i}(x_i).
double pair(const MarkedCloud& measure, const StateTestFunction& phi);

/// Exact 1-D Wasserstein-1 between equal-mass weighted clouds (masses must
/// agree to 1e-12): integral of |F_a - F_b|.
double w1_1d(const Cloud& a, const Cloud& b);
double w1_1d(std::span<const double> xa, std::span<const double> xb);  // uniform weights

/// 1-D W1 between a cloud and cell masses on a grid. The density CDF is
/// piecewise linear through (x_min, 0), (center_c, mass below center_c) and
/// (x_max, total). A mass mismatch up to 1e-3 is absorbed by rescaling the
/// density; larger mismatches throw.
double w1_1d_to_density(const Cloud& cloud, const Grid1D& grid, std::span<const double> masses);

/// Optimal assignment W1 between two uniform clouds of equal size (<= 2048)
/// under the Euclidean cost (Hungarian algorithm, O(n^3)).
double w1_exact_assignment(const Cloud& a, const Cloud& b);

/// n_proj unit directions drawn uniformly on the sphere S^{d-1}.
std::vector<double> random_directions(int dim, int n_proj, RngStream& rng);

/// 1 / E|<theta, e_1>| for theta uniform on S^{d-1}: pi/2 in 2-D, 2 in 3-D.
double sliced_scale(int dim);

/// Mean of 1-D W1 over random projections (d >= 2), times sliced_scale(d) so
/// that a translation by c has distance |c| in expectation over directions.
double sliced_w1(const Cloud& a, const Cloud& b, int n_proj, RngStream& rng);

/// Sliced W1 against a fixed reference with sorted projections cached.
class SlicedReference {
 public:
  SlicedReference(const Cloud& reference, std::vector<double> directions);
  /// Both clouds are renormalized to unit mass; scaled as sliced_w1.
  double distance(const Cloud& cloud) const;
  int n_proj() const { return n_proj_; }

 private:
  int dim_;
  int n_proj_;
  std::vector<double> dirs_;
  std::vector<std::vector<double>> ref_x_;   // sorted projections
  std::vector<std::vector<double>> ref_cdf_; // cumulative normalized weights
};

struct WeightedNormSpec {
  int j = 0;            // derivative order, 0..3
  double alpha = 0.0;   // weight exponent
  double half_width = 20.0;
  int points = 4001;    // midpoint nodes per axis
};

struct SobolevNorm {
  double value = 0.0;
  /// False when the outer half of the box carries more than 1% of the
  /// integral, i.e. the integrand does not decay over the grid.
  bool integrable = true;
};

/// (sum_{|k|<=j} int |D^k phi|^2 / (1+|x|^2)^alpha dx)^(1/2) on a midpoint
/// grid; d <= 2. Analytic derivatives up to order 2 in 1-D and order 1 in 2-D,
/// central differences of the analytic gradient beyond that.
SobolevNorm weighted_sobolev_norm(const TestFunction& phi, const WeightedNormSpec& spec,
                                  int dim = 1);

}  // namespace mfsir
