// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsir/model.hpp"

namespace mfsir {

/// O(N^2) interaction sums over an ensemble. The loops here are compiled
/// with aggressive floating-point flags, so results agree with the reference
/// evaluators in model.hpp to rounding, not bitwise. They are deterministic
/// for a given build.
class PairSums {
 public:
  /// out[i*d + k] = (1/N) sum_j V(x_i, e_i, x_j, e_j)_k
  void drift(const DriftSpec& spec, const ParticleEnsemble& ens, std::span<double> out);

  /// out[i] = (1/N) sum_{j != i, e_j = I} K(x_i, x_j) for susceptible i and 0
  /// otherwise. `cell_list` only changes the traversal for compact kernels.
  void infection(const KernelSpec& spec, const ParticleEnsemble& ens, std::span<double> out,
                 bool cell_list = false);

 private:
  void infection_cells(const KernelSpec& spec, const ParticleEnsemble& ens,
                       std::span<double> out);

  std::vector<double> soa_;
  std::vector<double> acc_;
  std::vector<double> src_;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_order_;
};

/// Toeplitz product out[r] = sum_c table[c - r + offset] * in[c] for
/// r in [0, n_out) and c in [0, n_in).
void lag_convolve(const double* table, std::ptrdiff_t offset, const double* in, std::size_t n_in,
                  double* out, std::size_t n_out);

}  // namespace mfsir
