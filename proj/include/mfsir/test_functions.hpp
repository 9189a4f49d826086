// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfsir/model.hpp"

namespace mfsir {

/// Smooth test function on R^d of the form A * P(x_1 - c) * Q(|x - c e_1|^2),
/// with closed-form gradient and Laplacian:
///
///   gauss_hermite(k, s): He_k(x_1 / s) exp(-|x|^2 / (2 s^2))
///   bump(c, r):          exp(1 - 1 / (1 - |x - c e_1|^2 / r^2)) inside the ball
///   poly_decay(p, a):    x_1^p (1 + |x|^2)^(-a)
///
/// He_k are the probabilists' Hermite polynomials. A default-constructed
/// TestFunction is identically zero.
class TestFunction {
 public:
  enum class Family { gauss_hermite, bump, poly_decay };

  TestFunction() = default;
  static TestFunction gauss_hermite(int k, double s, double amplitude = 1.0);
  static TestFunction bump(double center, double radius, double amplitude = 1.0);
  static TestFunction poly_decay(int p, double alpha, double amplitude = 1.0);
  static TestFunction constant(double value) { return poly_decay(0, 0.0, value); }

  double value(Point x) const;
  void gradient(Point x, std::span<double> out) const;
  double laplacian(Point x) const;

  // d = 1 shortcuts.
  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  TestFunction scaled(double factor) const;
  bool is_zero() const { return amplitude_ == 0.0; }
  Family family() const { return family_; }
  std::string name() const;
  /// |phi(x)| = O(|x|^decay_order()) at infinity; -inf for rapid decay.
  double decay_order() const;

 private:
  // P, P', P'' at t = x_1 - shift and Q, Q', Q'' at q = |x - shift e_1|^2.
  void radial(double q, double& Q, double& dQ, double& d2Q) const;
  void axial(double t, double& P, double& dP, double& d2P) const;

  Family family_ = Family::poly_decay;
  int order_ = 0;
  double scale_ = 1.0;
  double shift_ = 0.0;
  double amplitude_ = 0.0;
};

/// Functions of the product space R^d x {S, I, R}: one TestFunction per state.
using StateTestFunction = std::array<TestFunction, 3>;

/// phi on channel e, zero on the other two.
StateTestFunction on_state(const TestFunction& phi, EpidemicState e);

/// Eight fixed functions spanning even/odd symmetry and two decay scales:
/// gh(0,1) gh(1,1) gh(2,1) gh(0,2) gh(1,2) bump(0.5,1.5) poly(1,1) poly(0,1).
std::vector<TestFunction> standard_bank();

/// Probabilists' Hermite polynomial He_k(t).
double hermite_he(int k, double t);

}  // namespace mfsir
