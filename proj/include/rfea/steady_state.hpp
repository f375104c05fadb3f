// Copyright 2026 The RFEA-Sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Closed-form bending of the whole tube at zero gravity.
//
// With all joints at theta/n, the per-joint balance k_j theta/n = r_hyd pi ri^2 p
// and the wall-volume relation over the full length L give
//
//   a theta^2 + b theta + c = 0,
//   a = k_ss ro,  b = k_ss L - r_hyd pi p ro^3,  c = -r_hyd pi p L ri0^2,
//
// with k_ss = k_j(ri_ss) / n. The radius dependence of k_j is resolved by
// fixed-point iteration on ri_ss.

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"

namespace rfea {

struct QuadraticCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct SteadySolution {
  double theta_ss = 0.0;      // total bending [rad]
  double r_i_ss = 0.0;        // [m]
  double elongation_s = 0.0;  // ro * theta_ss [m]
  double k_ss = 0.0;          // k_j(r_i_ss) / n [N m / rad]
  int iterations = 0;
  bool stiffness_clamped = false;
};

struct SteadyOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;  // on successive theta iterates [rad]
  /// Evaluate the spring law once at the unpressurised radius and stop.
  bool stiffness_at_initial_radius = false;
};

/// Whole-tube spring constant k_j(r_i) / n.
inline double steady_stiffness(double r_i, const ActuatorGeometry& geometry,
                               const MaterialParams& params) {
  return spring_coefficient(r_i, params).value / geometry.segment_count();
}

inline QuadraticCoefficients quadratic_coefficients(double p, const ActuatorGeometry& geometry,
                                                    const MaterialParams& params, double k_ss) {
  if (p < 0.0) throw DomainError("quadratic_coefficients: negative pressure");
  const double r_o = geometry.outer_radius();
  const double L0 = geometry.total_length();
  const double r_i0 = geometry.initial_inner_radius();
  const double drive = params.r_hyd * std::numbers::pi * p;
  return {k_ss * r_o, k_ss * L0 - drive * r_o * r_o * r_o, -drive * L0 * r_i0 * r_i0};
}

/// Coefficients with k_ss evaluated at the unpressurised inner radius.
inline QuadraticCoefficients quadratic_coefficients(double p, const ActuatorGeometry& geometry,
                                                    const MaterialParams& params) {
  return quadratic_coefficients(
      p, geometry, params, steady_stiffness(geometry.initial_inner_radius(), geometry, params));
}

/// The non-negative root of a x^2 + b x + c with a > 0 and c <= 0,
/// evaluated without cancellation.
inline double nonnegative_root(const QuadraticCoefficients& q) {
  if (!(q.a > 0.0)) throw DomainError("nonnegative_root: leading coefficient must be positive");
  if (q.c > 0.0) throw DomainError("nonnegative_root: constant term must not be positive");
  if (q.c == 0.0) return std::max(0.0, -q.b / q.a);
  const double disc = std::sqrt(q.b * q.b - 4.0 * q.a * q.c);
  if (q.b >= 0.0) return -2.0 * q.c / (q.b + disc);
  return (disc - q.b) / (2.0 * q.a);
}

inline SteadySolution solve_bending(double p, const ActuatorGeometry& geometry,
                                    const MaterialParams& params, const SteadyOptions& opt = {}) {
  if (p < 0.0) throw DomainError("solve_bending: negative pressure");
  if (!(params.r_hyd > 0.0)) throw DomainError("solve_bending: r_hyd must be positive");
  const double r_o = geometry.outer_radius();
  const double L0 = geometry.total_length();
  const double r_i0 = geometry.initial_inner_radius();

  SteadySolution sol;
  sol.r_i_ss = r_i0;
  double theta_prev = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Coefficient k = spring_coefficient(sol.r_i_ss, params);
    sol.k_ss = k.value / geometry.segment_count();
    sol.stiffness_clamped = k.clamped;
    if (!(sol.k_ss > 0.0)) {
      throw ConvergenceError("solve_bending: spring coefficient vanished at r_i = " +
                             std::to_string(sol.r_i_ss));
    }
    sol.theta_ss = nonnegative_root(quadratic_coefficients(p, geometry, params, sol.k_ss));
    sol.r_i_ss = steady_inner_radius(sol.theta_ss, r_o, L0, r_i0);
    sol.elongation_s = segment_elongation(sol.theta_ss, r_o);
    sol.iterations = it;
    if (opt.stiffness_at_initial_radius) return sol;
    if (it > 1 && std::abs(sol.theta_ss - theta_prev) < opt.tolerance) {
      // final stiffness consistent with the returned radius
      sol.k_ss = steady_stiffness(sol.r_i_ss, geometry, params);
      return sol;
    }
    theta_prev = sol.theta_ss;
  }
  throw ConvergenceError("solve_bending: fixed point did not converge in " +
                         std::to_string(opt.max_iterations) + " iterations");
}

/// Torque balance r_hyd pi ri_ss^2 p - k_ss theta_ss of a solution.
inline double steady_residual(const SteadySolution& sol, double p, const MaterialParams& params) {
  return params.r_hyd * std::numbers::pi * sol.r_i_ss * sol.r_i_ss * p - sol.k_ss * sol.theta_ss;
}

}  // namespace rfea
