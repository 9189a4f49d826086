// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mfsir/model.hpp"

namespace mfsir {

/// Uniform 1-D grid of `cells` cells on [x_min, x_max].
struct Grid1D {
  double x_min = -1.0;
  double x_max = 1.0;
  int cells = 16;

  double h() const { return (x_max - x_min) / cells; }
  double center(int c) const { return x_min + (c + 0.5) * h(); }
  /// Left edge of cell f (f == cells gives x_max).
  double face(int f) const { return x_min + f * h(); }
  void validate() const;

  /// Domain holding the initial law's 6-sigma core plus the worst-case
  /// spread by time T (drift bound * T + 6 sigma_max sqrt(T)).
  static Grid1D covering(const ModelConfig& config, double T, int cells);
};

}  // namespace mfsir
