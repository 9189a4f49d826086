// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/grid.hpp"

#include <cmath>

#include "mfsir/error.hpp"

namespace mfsir {

void Grid1D::validate() const {
  if (cells < 16) throw ConfigError("grid.cells", "must be >= 16");
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min)) {
    throw ConfigError("grid.domain", "need finite x_min < x_max");
  }
}

Grid1D Grid1D::covering(const ModelConfig& config, double T, int cells) {
  if (config.dim != 1) throw UsageError("Grid1D::covering: grid solvers are 1-D only");
  auto [lo, hi] = config.initial.support_1d(6.0);
  const double spread = config.drift.bound() * T + 6.0 * config.diffusion.bound() * std::sqrt(T);
  Grid1D g{lo - spread, hi + spread, cells};
  g.validate();
  return g;
}

}  // namespace mfsir
