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

// Lagrangian dynamics of the planar revolute-spring-damper chain,
//
//   M(t, q) qdd - H(t, q, qd) = tau,
//
// where M and H depend on time through the per-segment inner radii, which
// evolve with the joint motion under the incompressibility constraint.
//
// Internally the chain is assembled in absolute link angles
// phi_a = q_1 + ... + q_a. In those coordinates the kinetic energy is
//
//   T = 1/2 sum_ab G_ab cos(phi_a - phi_b) dphi_a dphi_b + 1/2 sum_a I_a dphi_a^2
//
// with G_ab = m (dL lc + (n - 1 - max(a, b)) dL^2) off the diagonal and
// G_aa = m (lc^2 + (n - 1 - a) dL^2). Joint-space quantities follow from
// phi = S q with S the lower-triangular matrix of ones.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"
#include "rfea/kinematics.hpp"

namespace rfea {

/// Generalized coordinates, velocities and inner radii of the chain.
struct ChainState {
  Eigen::VectorXd q;
  Eigen::VectorXd q_dot;
  Eigen::VectorXd r_inner;
  double time = 0.0;

  int size() const { return static_cast<int>(q.size()); }

  /// Unpressurized tube hanging straight down.
  static ChainState rest(const ActuatorGeometry& geometry, double t0 = 0.0) {
    const int n = geometry.segment_count();
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
            Eigen::VectorXd::Constant(n, geometry.initial_inner_radius()), t0};
  }
};

struct StateDerivative {
  Eigen::VectorXd q_dot;
  Eigen::VectorXd q_ddot;
  Eigen::VectorXd r_dot;
};

struct SegmentBodyProps {
  double mass = 0.0;
  double I_xx = 0.0;
  double l_c = 0.0;
};

/// Thick-walled cylinder about the transverse axis through its centre of mass.
inline double segment_inertia(double mass, double r_o, double r_i, double segment_length) {
  return mass * (3.0 * (r_o * r_o + r_i * r_i) + segment_length * segment_length) / 12.0;
}

/// Everything the equations of motion need besides the state.
struct ChainModel {
  ActuatorGeometry geometry;
  MaterialParams params;
  bool gravity_enabled = true;
  /// Upper bound on the (estimated) mass-matrix condition number.
  double max_condition = 1e12;

  int n() const { return geometry.segment_count(); }
  double segment_mass() const { return params.total_mass / geometry.segment_count(); }
  double com_offset() const { return 0.5 * geometry.segment_length(); }
  double g() const { return gravity_enabled ? params.gravity : 0.0; }

  SegmentBodyProps body_props(double r_i) const {
    return {segment_mass(),
            segment_inertia(segment_mass(), geometry.outer_radius(), r_i,
                            geometry.segment_length()),
            com_offset()};
  }
};

namespace detail {

inline void check_state(const ChainState& s, const ChainModel& model) {
  const int n = model.n();
  if (s.q.size() != n || s.q_dot.size() != n || s.r_inner.size() != n) {
    throw DomainError("chain state size does not match segment count " + std::to_string(n));
  }
}

inline Eigen::VectorXd absolute_angles(const Eigen::VectorXd& q) {
  Eigen::VectorXd phi(q.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) phi[i] = (acc += q[i]);
  return phi;
}

/// Suffix sums: (S^T v)_j = sum_{a >= j} v_a.
inline Eigen::VectorXd to_joint_space(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  double acc = 0.0;
  for (Eigen::Index i = v.size() - 1; i >= 0; --i) out[i] = (acc += v[i]);
  return out;
}

/// Coupling coefficient G_ab for a != b (depends on the distal index only).
inline double off_diagonal_coupling(const ChainModel& model, int distal) {
  const double dL = model.geometry.segment_length();
  return model.segment_mass() * (dL * model.com_offset() + (model.n() - 1 - distal) * dL * dL);
}

inline double diagonal_coupling(const ChainModel& model, int a, double r_i) {
  const double dL = model.geometry.segment_length();
  const double lc = model.com_offset();
  return model.segment_mass() * (lc * lc + (model.n() - 1 - a) * dL * dL) +
         model.body_props(r_i).I_xx;
}

inline Eigen::VectorXd radius_rates(const ChainState& s, const ChainModel& model) {
  const double r_o = model.geometry.outer_radius();
  const double L0 = model.geometry.initial_segment_length();
  Eigen::VectorXd r_dot(s.size());
  for (int j = 0; j < s.size(); ++j) {
    r_dot[j] = inner_radius_rate(s.r_inner[j], r_o, r_o * s.q[j], L0, r_o * s.q_dot[j]);
  }
  return r_dot;
}

inline Eigen::MatrixXd assemble_mass_matrix(const ChainState& s, const ChainModel& model) {
  const int n = model.n();
  const Eigen::VectorXd phi = absolute_angles(s.q);
  Eigen::MatrixXd m_abs(n, n);
  for (int a = 0; a < n; ++a) {
    m_abs(a, a) = diagonal_coupling(model, a, s.r_inner[a]);
    for (int b = a + 1; b < n; ++b) {
      m_abs(a, b) = m_abs(b, a) = off_diagonal_coupling(model, b) * std::cos(phi[a] - phi[b]);
    }
  }
  // M = S^T M_abs S via suffix sums over columns, then over rows.
  for (int a = 0; a < n; ++a) {
    for (int b = n - 2; b >= 0; --b) m_abs(a, b) += m_abs(a, b + 1);
  }
  for (int a = n - 2; a >= 0; --a) m_abs.row(a) += m_abs.row(a + 1);
  return m_abs;
}

}  // namespace detail

/// Sum over links of 1/2 m |v_c|^2 + 1/2 I w^2 from explicit link velocities.
inline double kinetic_energy(const ChainState& s, const ChainModel& model) {
  detail::check_state(s, model);
  const double dL = model.geometry.segment_length();
  const double lc = model.com_offset();
  const double m = model.segment_mass();
  double phi = 0.0, omega = 0.0;
  double joint_vx = 0.0, joint_vy = 0.0;  // velocity of the proximal joint
  double energy = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    phi += s.q[i];
    omega += s.q_dot[i];
    // d/dt (-sin phi, -cos phi) = omega (-cos phi, sin phi)
    const double ux = -std::cos(phi) * omega, uy = std::sin(phi) * omega;
    const double vx = joint_vx + lc * ux, vy = joint_vy + lc * uy;
    energy += 0.5 * m * (vx * vx + vy * vy) +
              0.5 * model.body_props(s.r_inner[i]).I_xx * omega * omega;
    joint_vx += dL * ux;
    joint_vy += dL * uy;
  }
  return energy;
}

struct PotentialEnergy {
  double spring = 0.0;
  double gravity = 0.0;
  double total() const { return spring + gravity; }
};

/// Spring energy 1/2 k(ri) q^2 per joint plus m g y_c of every link centre,
/// with y measured from the base (so the hanging tube has negative gravity
/// energy).
inline PotentialEnergy potential_energy_terms(const ChainState& s, const ChainModel& model) {
  detail::check_state(s, model);
  PotentialEnergy u;
  for (int j = 0; j < s.size(); ++j) {
    u.spring += 0.5 * spring_coefficient(s.r_inner[j], model.params).value * s.q[j] * s.q[j];
  }
  const double g = model.g();
  if (g != 0.0) {
    const double dL = model.geometry.segment_length();
    const double lc = model.com_offset();
    double phi = 0.0, joint_y = 0.0;
    for (int i = 0; i < s.size(); ++i) {
      phi += s.q[i];
      u.gravity += model.segment_mass() * g * (joint_y - lc * std::cos(phi));
      joint_y -= dL * std::cos(phi);
    }
  }
  return u;
}

inline double potential_energy(const ChainState& s, const ChainModel& model) {
  return potential_energy_terms(s, model).total();
}

/// dU/dq at frozen inner radii.
inline Eigen::VectorXd potential_gradient(const ChainState& s, const ChainModel& model) {
  detail::check_state(s, model);
  const int n = model.n();
  const double dL = model.geometry.segment_length();
  const double lc = model.com_offset();
  const double mg = model.segment_mass() * model.g();
  Eigen::VectorXd grad_abs(n);
  double phi = 0.0;
  for (int a = 0; a < n; ++a) {
    phi += s.q[a];
    grad_abs[a] = mg * std::sin(phi) * ((n - 1 - a) * dL + lc);
  }
  Eigen::VectorXd grad = detail::to_joint_space(grad_abs);
  for (int j = 0; j < n; ++j) {
    grad[j] += spring_coefficient(s.r_inner[j], model.params).value * s.q[j];
  }
  return grad;
}

/// Joint-space mass matrix. Throws SingularMatrixError when the Cholesky
/// factorisation fails or the estimated condition number exceeds
/// model.max_condition.
inline Eigen::MatrixXd mass_matrix(const ChainState& s, const ChainModel& model) {
  detail::check_state(s, model);
  Eigen::MatrixXd m = detail::assemble_mass_matrix(s, model);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("mass matrix is not positive definite");
  const auto d = llt.matrixLLT().diagonal();
  const double ratio = d.maxCoeff() / d.minCoeff();
  if (!(ratio * ratio <= model.max_condition)) {
    throw SingularMatrixError("mass matrix condition estimate exceeds the configured bound");
  }
  return m;
}

/// H(t, q, qd): Coriolis and centrifugal terms, the inertia-rate term from
/// the changing inner radii, gravity and spring forces, so that
/// M qdd = H + tau.
inline Eigen::VectorXd bias_vector(const ChainState& s, const ChainModel& model) {
  detail::check_state(s, model);
  const int n = model.n();
  const double m = model.segment_mass();
  const Eigen::VectorXd phi = detail::absolute_angles(s.q);
  const Eigen::VectorXd omega = detail::absolute_angles(s.q_dot);
  const Eigen::VectorXd r_dot = detail::radius_rates(s, model);
  Eigen::VectorXd sn = phi.array().sin(), cs = phi.array().cos();

  Eigen::VectorXd gen_abs(n);
  for (int a = 0; a < n; ++a) {
    double centrifugal = 0.0;
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      const double sin_ab = sn[a] * cs[b] - cs[a] * sn[b];
      centrifugal += detail::off_diagonal_coupling(model, std::max(a, b)) * sin_ab * omega[b] *
                     omega[b];
    }
    // dI/dri = m ri / 2
    const double inertia_rate = 0.5 * m * s.r_inner[a] * r_dot[a];
    gen_abs[a] = -(centrifugal + inertia_rate * omega[a]);
  }
  return detail::to_joint_space(gen_abs) - potential_gradient(s, model);
}

/// Generalized joint torques tau = tau_hyd - b qd. The damper branch of
/// each joint follows the sign of its velocity unless `branches` fixes it.
inline Eigen::VectorXd generalized_forces(const ChainState& s, double p, const ChainModel& model,
                                          std::span<const DampingBranch> branches = {}) {
  detail::check_state(s, model);
  if (!branches.empty() && static_cast<int>(branches.size()) != s.size()) {
    throw DomainError("generalized_forces: one damping branch per joint required");
  }
  Eigen::VectorXd tau(s.size());
  for (int j = 0; j < s.size(); ++j) {
    if (branches.empty()) {
      tau[j] = joint_generalized_torque(p, s.r_inner[j], s.q_dot[j], model.params);
    } else {
      tau[j] = hydraulic_torque(p, s.r_inner[j], model.params.r_hyd) -
               damper_coefficient(s.r_inner[j], branches[j], model.params).value * s.q_dot[j];
    }
  }
  return tau;
}

inline StateDerivative state_derivative(const ChainState& s, double p, const ChainModel& model,
                                        std::span<const DampingBranch> branches = {}) {
  if (p < 0.0) throw DomainError("state_derivative: negative pressure");
  Eigen::MatrixXd m = detail::assemble_mass_matrix(s, model);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("mass matrix is not positive definite");
  const auto d = llt.matrixLLT().diagonal();
  const double ratio = d.maxCoeff() / d.minCoeff();
  if (!(ratio * ratio <= model.max_condition)) {
    throw SingularMatrixError("mass matrix condition estimate exceeds the configured bound");
  }
  StateDerivative out;
  out.q_dot = s.q_dot;
  out.q_ddot = llt.solve(bias_vector(s, model) + generalized_forces(s, p, model, branches));
  out.r_dot = detail::radius_rates(s, model);
  return out;
}

/// Explicit-time power dU/dt - dT/dt carried by the radius-dependent spring
/// and inertia coefficients. Together with tau . qd it closes the energy
/// balance d(T + U)/dt = tau . qd + dU/dt|_r - dT/dt|_r.
inline double parametric_power(const ChainState& s, const ChainModel& model) {
  const Eigen::VectorXd r_dot = detail::radius_rates(s, model);
  const double m = model.segment_mass();
  double power = 0.0, omega = 0.0;
  for (int j = 0; j < s.size(); ++j) {
    omega += s.q_dot[j];
    const double dk_dr = spring_coefficient(s.r_inner[j], model.params).slope;
    power += 0.5 * dk_dr * r_dot[j] * s.q[j] * s.q[j];
    power -= 0.5 * (0.5 * m * s.r_inner[j]) * r_dot[j] * omega * omega;
  }
  return power;
}

}  // namespace rfea
