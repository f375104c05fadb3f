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

// Time integration of the chain under an exogenous pressure history.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rfea/dynamics.hpp"
#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/kinematics.hpp"
#include "rfea/ode.hpp"

namespace rfea {

enum class IntegratorKind {
  kRosenbrock4,  // linearly implicit, L-stable; default
  kDopri5,       // explicit Dormand-Prince 5(4)
};

struct SimulationSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double output_rate_hz = 100.0;
  IntegratorKind integrator = IntegratorKind::kRosenbrock4;
  double initial_step = 1e-6;
  double min_step = 1e-14;
  long max_steps = 20'000'000;
  /// Keep the end time of every accepted step in Trajectory::step_times.
  bool record_steps = false;
  /// When non-empty, integrate through exactly these step end times
  /// without error control (a sequence recorded by an earlier run).
  std::vector<double> replay_steps;
};

struct TrajectorySample {
  ChainState state;
  double pressure = 0.0;
  PlanarPoint tip;
  double bend_total = 0.0;
  double kinetic = 0.0;
  PotentialEnergy potential;
  /// Work of the generalized forces, integral of (tau_hyd - b qd) . qd.
  double force_work = 0.0;
  /// Integral of the explicit-time power, see parametric_power().
  double parametric_work = 0.0;

  double energy() const { return kinetic + potential.total(); }
};

struct Trajectory {
  int segment_count = 0;
  std::vector<TrajectorySample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const TrajectorySample& back() const { return samples.back(); }
  long steps_taken = 0;
  std::vector<double> step_times;  // filled when SimulationSettings::record_steps
};

/// Uniform output grid t0, t0 + 1/rate, ..., always ending exactly at t_end.
inline std::vector<double> output_grid(double t0, double t_end, double rate_hz) {
  if (!(rate_hz > 0.0)) throw DomainError("output rate must be positive");
  std::vector<double> times;
  const double dt = 1.0 / rate_hz;
  for (long k = 0;; ++k) {
    const double t = t0 + k * dt;
    if (t >= t_end - 1e-9 * dt) break;
    times.push_back(t);
  }
  times.push_back(t_end);
  return times;
}

namespace detail {

/// Integration coordinates: [q, qd, u, W_force, W_param] with
/// u = (ri - ri0) / radius_unit. Radii are offset and rescaled so the shared
/// absolute/relative tolerances resolve them at the same level as angles.
///
/// The damper branch of every joint is held fixed over a step and chosen
/// from the velocity signs at its start. The damping torque is continuous in
/// qd, so this only moves the switch to a step boundary; it keeps stage
/// Jacobians consistent with the field they linearise.
class ChainOde {
 public:
  ChainOde(const ChainModel& model, const PressureTrace& trace, double t_hold)
      : model_(model), trace_(trace), t_hold_(t_hold), n_(model.n()),
        r0_(model.geometry.initial_inner_radius()),
        radius_unit_(1e-3 * model.geometry.outer_radius()),
        branches_(model.n(), DampingBranch::kPositive) {}

  long dimension() const { return 3 * n_ + 2; }
  long force_work_index() const { return 3 * n_; }
  long parametric_work_index() const { return 3 * n_ + 1; }

  Eigen::VectorXd pack(const ChainState& s) const {
    Eigen::VectorXd y(dimension());
    y.segment(0, n_) = s.q;
    y.segment(n_, n_) = s.q_dot;
    y.segment(2 * n_, n_) = (s.r_inner.array() - r0_) / radius_unit_;
    y[3 * n_] = 0.0;
    y[3 * n_ + 1] = 0.0;
    return y;
  }

  ChainState unpack(const Eigen::VectorXd& y, double t) const {
    return {y.segment(0, n_), y.segment(n_, n_),
            (r0_ + radius_unit_ * y.segment(2 * n_, n_).array()).matrix(), t};
  }

  /// Pressure and slope; beyond the end of the simulated window (trial
  /// stages of the final step) the pressure holds its last value.
  std::pair<double, double> pressure(double t) const {
    if (t >= t_hold_) return {trace_(t_hold_), 0.0};
    return trace_.at(t);
  }

  void rhs(const Eigen::VectorXd& y, double t, Eigen::VectorXd& dydt) const {
    rhs_at_pressure(y, t, pressure(t).first, dydt);
  }

  /// Forward-difference Jacobian. The time derivative is exact because the
  /// right-hand side is affine in the pressure.
  void jacobian(const Eigen::VectorXd& y, double t, Eigen::MatrixXd& jac,
                Eigen::VectorXd& dfdt) const {
    const long dim = dimension();
    const auto [p, slope] = pressure(t);
    Eigen::VectorXd f0(dim), f1(dim), yp = y;
    rhs_at_pressure(y, t, p, f0);
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    // The work accumulators do not feed back into the dynamics.
    jac.setZero(dim, dim);
    for (long c = 0; c < 3 * n_; ++c) {
      yp[c] = y[c] + sqrt_eps * std::max(1.0, std::abs(y[c]));
      const double step = yp[c] - y[c];
      rhs_at_pressure(yp, t, p, f1);
      jac.col(c) = (f1 - f0) / step;
      yp[c] = y[c];
    }
    if (slope != 0.0) {
      constexpr double kDp = 1000.0;
      rhs_at_pressure(y, t, p + kDp, f1);
      dfdt = (f1 - f0) * (slope / kDp);
    } else {
      dfdt.setZero(dim);
    }
  }

  /// Re-selects the damper branches from the velocities in `y`; returns
  /// whether any branch changed.
  bool select_branches(const Eigen::VectorXd& y) {
    bool changed = false;
    for (int j = 0; j < n_; ++j) {
      const DampingBranch b = damping_branch(y[n_ + j]);
      changed |= b != branches_[j];
      branches_[j] = b;
    }
    return changed;
  }

  long evaluations() const { return evaluations_; }
  const PressureTrace& trace() const { return trace_; }

 private:
  void rhs_at_pressure(const Eigen::VectorXd& y, double t, double p,
                       Eigen::VectorXd& dydt) const {
    const ChainState s = unpack(y, t);
    const StateDerivative d = state_derivative(s, p, model_, branches_);
    dydt.resize(dimension());
    dydt.segment(0, n_) = d.q_dot;
    dydt.segment(n_, n_) = d.q_ddot;
    dydt.segment(2 * n_, n_) = d.r_dot / radius_unit_;
    dydt[3 * n_] = generalized_forces(s, p, model_, branches_).dot(s.q_dot);
    dydt[3 * n_ + 1] = parametric_power(s, model_);
    ++evaluations_;
  }

  const ChainModel& model_;
  const PressureTrace& trace_;
  double t_hold_;
  int n_;
  double r0_;
  double radius_unit_;
  std::vector<DampingBranch> branches_;
  mutable long evaluations_ = 0;
};

inline TrajectorySample make_sample(const ChainState& s, double p, const ChainModel& model,
                                    double w_force, double w_param) {
  TrajectorySample out;
  out.state = s;
  out.pressure = p;
  out.tip = tip_position(std::span<const double>(s.q.data(), s.q.size()),
                         model.geometry.segment_length());
  out.bend_total = s.q.sum();
  out.kinetic = kinetic_energy(s, model);
  out.potential = potential_energy_terms(s, model);
  out.force_work = w_force;
  out.parametric_work = w_param;
  return out;
}

inline void check_accepted(const ChainState& s, const ChainModel& model) {
  constexpr double kMargin = 1e-9;
  const double r_o = model.geometry.outer_radius();
  for (int j = 0; j < s.size(); ++j) {
    if (!std::isfinite(s.q[j]) || !std::isfinite(s.q_dot[j]) || !std::isfinite(s.r_inner[j])) {
      throw IntegrationError("non-finite state at t = " + std::to_string(s.time));
    }
    if (s.r_inner[j] < kMargin || s.r_inner[j] > r_o - kMargin) {
      throw IntegrationError("inner radius of segment " + std::to_string(j + 1) +
                             " left (0, outer_radius) at t = " + std::to_string(s.time));
    }
  }
}

template <class Stepper>
Trajectory run_stepper(Stepper& stepper, ChainOde& ode, const ChainState& initial,
                       const ChainModel& model, std::span<const double> times,
                       const SimulationSettings& settings) {
  Trajectory traj;
  traj.segment_count = model.n();
  traj.samples.reserve(times.size());
  const double t0 = initial.time;
  const Eigen::VectorXd y0 = ode.pack(initial);
  ode.select_branches(y0);
  stepper.initialize(y0, t0, settings.initial_step);
  // Steps stop at every kink of the pressure trace and at the final time.
  std::vector<double> stops;
  for (const auto& [t, p] : ode.trace().samples()) {
    if (t > t0 && t < times.back()) stops.push_back(t);
  }
  stops.push_back(times.back());
  std::size_t next_stop = 0;
  stepper.set_stop_time(stops[0]);
  Eigen::VectorXd y(ode.dimension());
  const std::vector<double>& replay = settings.replay_steps;
  long steps = 0;
  for (double t_out : times) {
    if (t_out <= t0) {
      traj.samples.push_back(make_sample(initial, ode.pressure(t0).first, model, 0.0, 0.0));
      continue;
    }
    while (stepper.time() < t_out) {
      while (next_stop + 1 < stops.size() && stepper.time() >= stops[next_stop]) {
        stepper.set_stop_time(stops[++next_stop]);
      }
      try {
        if (replay.empty()) {
          stepper.step();
        } else {
          if (static_cast<std::size_t>(steps) >= replay.size()) {
            throw IntegrationError("replayed step sequence ends before t = " +
                                   std::to_string(t_out));
          }
          stepper.step_to(replay[steps]);
        }
      } catch (const IntegrationError&) {
        throw;
      } catch (const Error& e) {
        throw IntegrationError("integration failed near t = " + std::to_string(stepper.time()) +
                               ": " + e.what());
      }
      check_accepted(ode.unpack(stepper.state(), stepper.time()), model);
      if (ode.select_branches(stepper.state())) stepper.rhs_changed();
      if (settings.record_steps) traj.step_times.push_back(stepper.time());
      if (++steps > settings.max_steps) {
        throw IntegrationError("maximum number of integration steps exceeded");
      }
    }
    stepper.interpolate(t_out, y);
    const ChainState s = ode.unpack(y, t_out);
    check_accepted(s, model);
    traj.samples.push_back(make_sample(s, ode.pressure(t_out).first, model,
                                       y[ode.force_work_index()],
                                       y[ode.parametric_work_index()]));
  }
  traj.steps_taken = steps;
  return traj;
}

}  // namespace detail

/// Integrates the chain from `initial` and records samples at `output_times`
/// (ascending, not before initial.time; the last one is the end time).
inline Trajectory simulate_at(const ChainModel& model, const ChainState& initial,
                              const PressureTrace& trace, std::span<const double> output_times,
                              const SimulationSettings& settings = {}) {
  detail::check_state(initial, model);
  model.params.validate();
  if (output_times.empty()) throw DomainError("simulate: no output times");
  const double t_end = output_times.back();
  if (!(t_end > initial.time)) throw DomainError("simulate: t_end must exceed the initial time");
  if (!trace.covers(initial.time, t_end)) {
    throw DomainError("simulate: pressure trace does not cover the simulated interval");
  }
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    if (output_times[i] < initial.time || (i > 0 && output_times[i] < output_times[i - 1])) {
      throw DomainError("simulate: output times must be ascending and not precede the start");
    }
  }
  detail::check_accepted(initial, model);
  const auto& replay = settings.replay_steps;
  for (std::size_t i = 0; i < replay.size(); ++i) {
    if (!(replay[i] > (i == 0 ? initial.time : replay[i - 1]))) {
      throw DomainError("simulate: replayed step times must increase from the start time");
    }
  }
  if (!replay.empty() && replay.back() < t_end) {
    throw DomainError("simulate: replayed step times end before t_end");
  }

  detail::ChainOde ode(model, trace, t_end);
  const ode::StepControl control{settings.abs_tol, settings.rel_tol, settings.min_step};
  if (settings.integrator == IntegratorKind::kDopri5) {
    ode::Dopri5<detail::ChainOde> stepper(ode, control);
    return detail::run_stepper(stepper, ode, initial, model, output_times, settings);
  }
  ode::Rodas4<detail::ChainOde> stepper(ode, control);
  return detail::run_stepper(stepper, ode, initial, model, output_times, settings);
}

/// Integrates to `t_end` with samples on the uniform grid of
/// settings.output_rate_hz.
inline Trajectory simulate(const ChainModel& model, const ChainState& initial,
                           const PressureTrace& trace, double t_end,
                           const SimulationSettings& settings = {}) {
  if (!(t_end > initial.time)) throw DomainError("simulate: t_end must exceed the initial time");
  const std::vector<double> times = output_grid(initial.time, t_end, settings.output_rate_hz);
  return simulate_at(model, initial, trace, times, settings);
}

}  // namespace rfea
