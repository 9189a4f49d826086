// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mfsir/rng.hpp"

namespace mfsir {

enum class EpidemicState : std::uint8_t { S = 0, I = 1, R = 2 };

inline constexpr std::array<EpidemicState, 3> kStates{EpidemicState::S, EpidemicState::I,
                                                      EpidemicState::R};

constexpr int code(EpidemicState e) { return static_cast<int>(e); }
std::string_view to_string(EpidemicState e);
std::optional<EpidemicState> parse_state(std::string_view text);

using Point = std::span<const double>;

struct Individual {
  std::vector<double> position;
  EpidemicState state = EpidemicState::S;
};

/// Microscopic state of the N-particle system at one time. Positions are
/// stored row-major (individual i occupies [i*dim, (i+1)*dim)).
struct ParticleEnsemble {
  int dim = 1;
  double time = 0.0;
  std::vector<double> positions;
  std::vector<EpidemicState> states;

  ParticleEnsemble() = default;
  ParticleEnsemble(int dim, std::size_t n);

  std::size_t size() const { return states.size(); }
  Point position(std::size_t i) const {
    return {positions.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<double> position(std::size_t i) {
    return {positions.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  Individual individual(std::size_t i) const;
  std::array<std::size_t, 3> counts() const;
};

/// Weighted atoms in R^d (one state channel of a measure).
struct Cloud {
  int dim = 1;
  std::vector<double> positions;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  Point point(std::size_t i) const {
    return {positions.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  double mass() const;
  void add(Point x, double w);
};

/// Weighted atoms on R^d x {S, I, R}.
struct MarkedCloud {
  int dim = 1;
  std::vector<double> positions;
  std::vector<double> weights;
  std::vector<EpidemicState> states;

  std::size_t size() const { return weights.size(); }
  Point point(std::size_t i) const {
    return {positions.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

using StateClouds = std::array<Cloud, 3>;

/// Empirical measure (1/N) sum delta_(x_i, e_i) as a marked cloud.
MarkedCloud marked_cloud(const ParticleEnsemble& ensemble);
StateClouds split_by_state(const MarkedCloud& measure);

/// Infection kernel K(x, y); every family depends on |x - y| only.
struct KernelSpec {
  enum class Family { constant, gaussian, bump };

  Family family = Family::constant;
  double beta = 0.0;    // rate, 1/time
  double length = 1.0;  // gaussian length scale or bump radius

  static KernelSpec constant(double beta);
  static KernelSpec gaussian(double beta, double length);
  static KernelSpec bump(double beta, double radius);

  /// K as a function of the squared distance |x - y|^2.
  double profile(double dist2) const;
  double operator()(Point x, Point y) const;

  double bound() const { return beta; }
  double lipschitz() const;
  /// Infinity unless the family has compact support.
  double support_radius() const;
  void validate() const;
};

/// Interaction drift V(x, e, y, f) = w[e][f] * c(|y-x|^2) * (y - x), with
/// c(r2) = (a / l) / (1 + r2 / l^2). Norm bounded by a/2 * max|w|.
struct DriftSpec {
  enum class Family { zero, saturating_attraction, state_modulated };

  Family family = Family::zero;
  double speed = 0.0;   // a
  double length = 1.0;  // l
  std::array<std::array<double, 3>, 3> weights{{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}};

  static DriftSpec zero();
  static DriftSpec saturating_attraction(double speed, double length);
  static DriftSpec state_modulated(double speed, double length,
                                   std::array<std::array<double, 3>, 3> weights);

  double weight(EpidemicState e, EpidemicState f) const;
  /// c(r2): V = weight * radial_factor(|y-x|^2) * (y - x).
  double radial_factor(double dist2) const;
  /// True when every state pair shares the same weight.
  bool state_independent() const;
  double bound() const;
  double lipschitz() const;
  void validate() const;
};

/// Isotropic state-dependent diffusion: sigma(x, e) = s_e(x) * Id.
///   constant:       s_e(x) = base_e
///   smooth_bounded: s_e(x) = base_e + amplitude_e * exp(-|x|^2 / (2 l_e^2))
struct DiffusionSpec {
  enum class Family { constant, smooth_bounded };

  Family family = Family::constant;
  std::array<double, 3> base{0.0, 0.0, 0.0};
  std::array<double, 3> amplitude{0.0, 0.0, 0.0};
  std::array<double, 3> length{1.0, 1.0, 1.0};

  static DiffusionSpec constant(std::array<double, 3> sigma);
  static DiffusionSpec smooth_bounded(std::array<double, 3> base,
                                      std::array<double, 3> amplitude,
                                      std::array<double, 3> length);

  double sigma(Point x, EpidemicState e) const;
  double sigma_r2(double r2, EpidemicState e) const;
  double bound() const;
  /// Smallest eigenvalue of sigma sigma^T over space and states.
  double ellipticity() const;
  double lipschitz() const;
  bool is_constant() const { return family == Family::constant; }
  void validate() const;
};

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;        // length d
  std::vector<double> covariance;  // d x d row-major, SPD; all zero for an atom at mean

  bool atom() const;
};

/// Initial law mu_0: state probabilities and, per state, a Gaussian mixture
/// for the position conditioned on that state.
struct InitialLawSpec {
  std::array<double, 3> state_probabilities{1.0, 0.0, 0.0};
  std::array<std::vector<GaussianComponent>, 3> spatial;

  /// Standard normal positions in every state.
  static InitialLawSpec standard(int dim, std::array<double, 3> probabilities);

  /// P(E_0 = e, X_0 in [a, b]) for d = 1.
  double mass_1d(EpidemicState e, double a, double b) const;
  /// Density of (X_0, E_0 = e) at x for d = 1 (atoms excluded).
  double density_1d(EpidemicState e, double x) const;
  /// Smallest interval holding each component's mean +- k standard deviations.
  std::array<double, 2> support_1d(double k) const;
  void validate(int dim) const;
};

struct ModelConfig {
  int dim = 1;
  double gamma = 0.0;  // recovery rate, 1/time
  KernelSpec kernel;
  DriftSpec drift;
  DiffusionSpec diffusion;
  InitialLawSpec initial;

  /// D = ceil(d / 2); sets the moment order 4D.
  int sobolev_index() const { return (dim + 1) / 2; }
  void validate() const;
};

double eval_K(const KernelSpec& spec, Point x, Point y);
std::vector<double> eval_V(const DriftSpec& spec, Point x, EpidemicState e, Point y,
                           EpidemicState f);
void eval_V(const DriftSpec& spec, Point x, EpidemicState e, Point y, EpidemicState f,
            std::span<double> out);

/// V_mu(x, e) = sum_j w_j V(x, e, y_j, f_j), ascending atom order.
std::vector<double> mean_field_drift(const DriftSpec& spec, Point x, EpidemicState e,
                                     const MarkedCloud& measure);
/// K_mu(x) = sum_j w_j K(x, y_j) over the infected channel.
double mean_field_infection(const KernelSpec& spec, Point x, const Cloud& infected);

/// n i.i.d. draws from the initial law.
ParticleEnsemble sample_initial(const InitialLawSpec& spec, int dim, std::size_t n,
                                RngStream& rng);

/// Lower Cholesky factor of a d x d SPD matrix (row-major). Empty if not SPD.
std::vector<double> cholesky(std::span<const double> a, int dim);

}  // namespace mfsir
