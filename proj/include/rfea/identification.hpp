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

// Estimation of the seven material parameters from a tip trajectory.
//
// The optimiser is a bounded Levenberg-Marquardt iteration on parameters
// scaled by the initial guess, with a forward-difference Jacobian. A
// Nelder-Mead simplex takes over when the Jacobian loses rank.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include "rfea/dynamics.hpp"
#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"
#include "rfea/simulate.hpp"

namespace rfea {

/// Residual entry used for every sample when the simulation fails [m].
inline constexpr double kFailurePenalty = 10.0;

struct MeasuredSample {
  double t = 0.0;
  double tip_x = 0.0;
  double tip_y = 0.0;
};

struct MeasuredTrajectory {
  std::vector<MeasuredSample> samples;
  std::string source;

  void validate() const {
    if (samples.empty()) throw DataError("measured trajectory '" + source + "' is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!std::isfinite(s.t) || !std::isfinite(s.tip_x) || !std::isfinite(s.tip_y)) {
        throw DataError("measured trajectory: non-finite value in sample " + std::to_string(i));
      }
      if (i > 0 && !(s.t > samples[i - 1].t)) {
        throw DataError("measured trajectory: times not strictly increasing at sample " +
                        std::to_string(i));
      }
    }
  }

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(samples.size());
    for (const auto& s : samples) t.push_back(s.t);
    return t;
  }

  /// Tip positions of a simulated trajectory, one sample per output time.
  static MeasuredTrajectory from_trajectory(const Trajectory& traj, std::string source) {
    MeasuredTrajectory m;
    m.source = std::move(source);
    m.samples.reserve(traj.size());
    for (const auto& s : traj.samples) m.samples.push_back({s.state.time, s.tip.x, s.tip.y});
    return m;
  }
};

enum class Objective { kTipY, kTipXY };

using ParamVector = std::array<double, MaterialParams::kIdentifiable>;

struct ParameterBounds {
  ParamVector low{};
  ParamVector high{};

  /// Wide box honouring the sign constraints, with the torque arm in
  /// [3 mm, 5 mm].
  static ParameterBounds defaults() {
    return {{1e-6, -1e5, 1e-9, -1e4, 1e-9, -1e4, 0.003},
            {1e3, 0.0, 1e2, 1e4, 1e2, 1e4, 0.005}};
  }

  void validate() const {
    for (std::size_t i = 0; i < low.size(); ++i) {
      const std::string name = MaterialParams::kNames[i];
      if (!std::isfinite(low[i]) || !std::isfinite(high[i]) || !(low[i] <= high[i])) {
        throw DomainError("bounds for " + name + " must be finite with low <= high");
      }
    }
    if (!(low[0] > 0.0)) throw DomainError("bounds: k_0 must stay positive");
    if (!(high[1] <= 0.0)) throw DomainError("bounds: m_k must stay non-positive");
    if (!(low[2] > 0.0) || !(low[4] > 0.0)) throw DomainError("bounds: b_0 must stay positive");
    if (low[6] < 0.003 || high[6] > 0.005) {
      throw DomainError("bounds: r_hyd must lie within [0.003, 0.005] m");
    }
  }

  bool contains(const ParamVector& v) const {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] >= low[i] && v[i] <= high[i])) return false;
    }
    return true;
  }

  ParamVector clip(ParamVector v) const {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], low[i], high[i]);
    return v;
  }
};

/// Tolerances tight enough for finite-difference Jacobians.
inline SimulationSettings fit_simulation_defaults() {
  SimulationSettings s;
  s.abs_tol = 1e-10;
  s.rel_tol = 1e-8;
  return s;
}

struct FitProblem {
  MeasuredTrajectory measured;
  PressureTrace trace;
  ActuatorGeometry geometry;
  ParameterBounds bounds = ParameterBounds::defaults();
  /// Starting point; also supplies total_mass and gravity.
  MaterialParams initial_guess;
  Objective objective = Objective::kTipY;
  bool gravity_enabled = true;
  SimulationSettings simulation = fit_simulation_defaults();
  /// Rest at the start of the pressure trace when unset.
  std::optional<ChainState> initial_state;

  ChainState start_state() const {
    return initial_state ? *initial_state : ChainState::rest(geometry, trace.start_time());
  }

  void validate() const {
    measured.validate();
    bounds.validate();
    if (trace.samples().empty()) throw DataError("fit problem: empty pressure trace");
    const double t0 = start_state().time;
    if (measured.samples.front().t < t0) {
      throw DataError("fit problem: measurements start before the simulation");
    }
    if (!trace.covers(t0, measured.samples.back().t)) {
      throw DataError("fit problem: pressure trace does not cover the measured interval");
    }
    if (measured.samples.back().t <= t0) {
      throw DataError("fit problem: measurements must extend past the start time");
    }
  }
};

struct ResidualEvaluation {
  Eigen::VectorXd values;
  bool penalized = false;
  std::string failure;
  std::vector<double> step_times;  // accepted integrator steps
};

inline ChainModel fit_model(const MaterialParams& params, const FitProblem& problem) {
  return {problem.geometry, params, problem.gravity_enabled};
}

/// Simulated minus measured tip coordinates at the measured times: Y only,
/// or all X errors followed by all Y errors.
///
/// With `replay_steps` the simulation reuses that step sequence, so nearby
/// parameter sets are integrated by the same discrete map (smooth finite
/// differences). A replay that fails falls back to adaptive stepping.
inline ResidualEvaluation evaluate_residual(const MaterialParams& params,
                                            const FitProblem& problem,
                                            std::span<const double> replay_steps = {}) {
  const auto& meas = problem.measured.samples;
  const long rows = static_cast<long>(meas.size()) * (problem.objective == Objective::kTipXY ? 2 : 1);
  ResidualEvaluation out;
  if (!problem.bounds.contains(params.identifiable())) {
    throw DomainError("residual: parameters outside the bounds");
  }
  const std::vector<double> times = problem.measured.times();
  SimulationSettings settings = problem.simulation;
  settings.record_steps = true;
  settings.replay_steps.assign(replay_steps.begin(), replay_steps.end());
  try {
    Trajectory traj;
    try {
      traj = simulate_at(fit_model(params, problem), problem.start_state(), problem.trace, times,
                         settings);
    } catch (const NumericError&) {
      if (settings.replay_steps.empty()) throw;
      settings.replay_steps.clear();
      traj = simulate_at(fit_model(params, problem), problem.start_state(), problem.trace, times,
                         settings);
    }
    out.step_times = std::move(traj.step_times);
    out.values.resize(rows);
    const long m = static_cast<long>(meas.size());
    for (long i = 0; i < m; ++i) {
      const PlanarPoint& tip = traj.samples[i].tip;
      if (problem.objective == Objective::kTipXY) {
        out.values[i] = tip.x - meas[i].tip_x;
        out.values[m + i] = tip.y - meas[i].tip_y;
      } else {
        out.values[i] = tip.y - meas[i].tip_y;
      }
    }
  } catch (const NumericError& e) {
    out.values = Eigen::VectorXd::Constant(rows, kFailurePenalty);
    out.penalized = true;
    out.failure = e.what();
  }
  return out;
}

inline Eigen::VectorXd residual(const MaterialParams& params, const FitProblem& problem) {
  return evaluate_residual(params, problem).values;
}

inline double rms(const Eigen::VectorXd& r) {
  return r.size() == 0 ? 0.0 : std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

/// Spring parameters from steady bending observations (pressure [Pa], total
/// bending [rad]) with a fixed torque arm. Each observation with p > 0 gives
/// k(ri_ss) = n r_hyd pi ri_ss^2 p / theta; a line through those values gives
/// k_0 and m_k. Dampers are seeded with small positive constants.
inline MaterialParams initial_guess_from_steady(
    const std::vector<std::pair<double, double>>& steady_points, const ActuatorGeometry& geometry,
    const MaterialParams& base = {}, double r_hyd = 0.004) {
  if (!(r_hyd > 0.0)) throw DomainError("initial_guess_from_steady: r_hyd must be positive");
  std::vector<double> radius, stiffness, pressures;
  for (const auto& [p, theta] : steady_points) {
    if (!std::isfinite(p) || !std::isfinite(theta) || p < 0.0 || theta < 0.0) {
      throw DataError("initial_guess_from_steady: invalid observation");
    }
    if (p == 0.0) continue;
    if (!(theta > 0.0)) throw DataError("initial_guess_from_steady: zero bending under pressure");
    for (double q : pressures) {
      if (q == p) throw DataError("initial_guess_from_steady: repeated pressure");
    }
    pressures.push_back(p);
    const double ri = steady_inner_radius(theta, geometry.outer_radius(), geometry.total_length(),
                                          geometry.initial_inner_radius());
    radius.push_back(ri);
    stiffness.push_back(geometry.segment_count() * r_hyd * std::numbers::pi * ri * ri * p / theta);
  }
  if (radius.size() < 2) {
    throw DataError("initial_guess_from_steady: need at least two distinct non-zero pressures");
  }
  // Centred least squares; the radii differ only slightly.
  const double nobs = static_cast<double>(radius.size());
  double r_mean = 0.0, k_mean = 0.0;
  for (std::size_t i = 0; i < radius.size(); ++i) {
    r_mean += radius[i] / nobs;
    k_mean += stiffness[i] / nobs;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < radius.size(); ++i) {
    sxx += (radius[i] - r_mean) * (radius[i] - r_mean);
    sxy += (radius[i] - r_mean) * (stiffness[i] - k_mean);
  }
  if (!(sxx > 0.0)) throw DataError("initial_guess_from_steady: observations do not separate");
  MaterialParams out = base;
  out.m_k = sxy / sxx;
  out.k_0 = k_mean - out.m_k * r_mean;
  out.r_hyd = r_hyd;
  out.b_0_pos = out.b_0_neg = 0.01;
  out.m_b_pos = out.m_b_neg = 0.0;
  return out;
}

struct FitSettings {
  int max_iterations = 60;
  double relative_step = 1e-6;     // forward-difference step, relative
  double improvement_tol = 1e-8;   // relative cost decrease ...
  int improvement_window = 3;      // ... over this many iterations
  double gradient_tol = 1e-12;     // projected scaled gradient, relative to the cost
  double rank_tol = 1e-12;         // smallest / largest singular value of J
  int max_damping_increases = 6;  // trial steps per iteration
  int simplex_max_evaluations = 3000;
  unsigned threads = 1;            // parallel Jacobian columns
  /// Called with every candidate before it is simulated; must be thread
  /// safe when threads > 1.
  std::function<void(const MaterialParams&)> on_candidate;
};

struct FitResult {
  MaterialParams params;
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // residual RMS after each iteration, starting value first
  long evaluations = 0;
  std::string method;           // "levenberg-marquardt" or "nelder-mead"
  std::string stop_reason;
};

namespace detail {

/// Residuals as a function of scaled parameters x = theta / scale.
class ScaledObjective {
 public:
  ScaledObjective(const FitProblem& problem, const FitSettings& settings)
      : problem_(problem), settings_(settings) {
    const ParamVector guess = problem.bounds.clip(problem.initial_guess.identifiable());
    for (std::size_t i = 0; i < guess.size(); ++i) {
      const double span = std::max(std::abs(problem.bounds.low[i]), std::abs(problem.bounds.high[i]));
      scale_[i] = guess[i] != 0.0 ? std::abs(guess[i]) : std::max(1e-3 * span, 1e-12);
      low_[i] = problem.bounds.low[i] / scale_[i];
      high_[i] = problem.bounds.high[i] / scale_[i];
    }
  }

  static constexpr long kDim = MaterialParams::kIdentifiable;

  Eigen::VectorXd to_scaled(const ParamVector& v) const {
    Eigen::VectorXd x(kDim);
    for (long i = 0; i < kDim; ++i) x[i] = v[i] / scale_[i];
    return x;
  }

  MaterialParams params(const Eigen::VectorXd& x) const {
    ParamVector v;
    for (long i = 0; i < kDim; ++i) v[i] = std::clamp(x[i] * scale_[i], problem_.bounds.low[i], problem_.bounds.high[i]);
    MaterialParams p = problem_.initial_guess;
    p.set_identifiable(v);
    return p;
  }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (long i = 0; i < kDim; ++i) x[i] = std::clamp(x[i], low_[i], high_[i]);
    return x;
  }

  double low(long i) const { return low_[i]; }
  double high(long i) const { return high_[i]; }

  ResidualEvaluation evaluate(const Eigen::VectorXd& x,
                              std::span<const double> replay_steps = {}) const {
    const MaterialParams p = params(x);
    if (!problem_.bounds.contains(p.identifiable())) {
      throw std::logic_error("fit: candidate outside bounds");
    }
    if (settings_.on_candidate) settings_.on_candidate(p);
    ++evaluations_;
    return evaluate_residual(p, problem_, replay_steps);
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return evaluate(x).values; }

  /// Forward differences on the step sequence of the base point; steps that
  /// would leave the box go backwards.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const ResidualEvaluation& base) const {
    const Eigen::VectorXd& r0 = base.values;
    Eigen::MatrixXd jac(r0.size(), kDim);
    auto column = [&](long j) {
      Eigen::VectorXd xp = x;
      double h = settings_.relative_step * std::max(std::abs(x[j]), 1.0);
      if (x[j] + h > high_[j]) h = -h;
      xp[j] = x[j] + h;
      const double actual = xp[j] - x[j];
      jac.col(j) = (evaluate(xp, base.step_times).values - r0) / actual;
    };
    if (settings_.threads <= 1) {
      for (long j = 0; j < kDim; ++j) column(j);
    } else {
      std::vector<std::future<void>> jobs;
      for (long j = 0; j < kDim; ++j) {
        jobs.push_back(std::async(std::launch::async, column, j));
        if (jobs.size() >= settings_.threads) {
          for (auto& f : jobs) f.get();
          jobs.clear();
        }
      }
      for (auto& f : jobs) f.get();
    }
    return jac;
  }

  long evaluations() const { return evaluations_; }

 private:
  const FitProblem& problem_;
  const FitSettings& settings_;
  std::array<double, kDim> scale_{}, low_{}, high_{};
  mutable std::atomic<long> evaluations_{0};
};

struct SimplexOutcome {
  Eigen::VectorXd x;
  double cost = 0.0;
  bool converged = false;
};

/// Nelder-Mead on the projected box.
inline SimplexOutcome nelder_mead(const ScaledObjective& obj, const Eigen::VectorXd& x0,
                                  long rows, int max_evaluations, std::vector<double>& history) {
  const long n = x0.size();
  auto cost = [&](const Eigen::VectorXd& x) { return 0.5 * obj(x).squaredNorm(); };
  std::vector<Eigen::VectorXd> pts(n + 1, obj.project(x0));
  for (long i = 0; i < n; ++i) {
    const double step = 0.1 * std::max(std::abs(x0[i]), 1.0);
    pts[i + 1][i] += (pts[i + 1][i] + step <= obj.high(i)) ? step : -step;
    pts[i + 1] = obj.project(pts[i + 1]);
  }
  std::vector<double> f(n + 1);
  for (long i = 0; i <= n; ++i) f[i] = cost(pts[i]);
  int evals = static_cast<int>(n + 1);
  std::vector<long> order(n + 1);
  bool converged = false;
  while (evals < max_evaluations) {
    for (long i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](long a, long b) { return f[a] < f[b]; });
    const long best = order.front(), worst = order.back(), second = order[n - 1];
    history.push_back(std::sqrt(2.0 * f[best] / static_cast<double>(std::max<long>(1, rows))));
    if (std::abs(f[worst] - f[best]) <= 1e-14 * (std::abs(f[best]) + 1e-300)) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (long i = 0; i <= n; ++i) {
      if (i != worst) centroid += pts[i] / static_cast<double>(n);
    }
    const Eigen::VectorXd xr = obj.project(centroid + (centroid - pts[worst]));
    const double fr = cost(xr);
    ++evals;
    if (fr < f[best]) {
      const Eigen::VectorXd xe = obj.project(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = cost(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe, f[worst] = fe;
      } else {
        pts[worst] = xr, f[worst] = fr;
      }
      continue;
    }
    if (fr < f[second]) {
      pts[worst] = xr, f[worst] = fr;
      continue;
    }
    const bool outside = fr < f[worst];
    const Eigen::VectorXd xc = obj.project(
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid)));
    const double fc = cost(xc);
    ++evals;
    if (fc < std::min(fr, f[worst])) {
      pts[worst] = xc, f[worst] = fc;
      continue;
    }
    for (long i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = obj.project(pts[best] + 0.5 * (pts[i] - pts[best]));
      f[i] = cost(pts[i]);
      ++evals;
    }
  }
  const long best = std::min_element(f.begin(), f.end()) - f.begin();
  return {pts[best], f[best], converged};
}

}  // namespace detail

/// Bounded nonlinear least squares over the seven identifiable parameters.
inline FitResult fit(const FitProblem& problem, const FitSettings& settings = {}) {
  problem.validate();
  if (settings.max_iterations < 1) throw DomainError("fit: max_iterations must be positive");
  const detail::ScaledObjective obj(problem, settings);
  constexpr long kDim = detail::ScaledObjective::kDim;

  FitResult result;
  result.method = "levenberg-marquardt";
  Eigen::VectorXd x = obj.to_scaled(problem.bounds.clip(problem.initial_guess.identifiable()));
  ResidualEvaluation cur = obj.evaluate(x);
  double cost = 0.5 * cur.values.squaredNorm();
  result.history.push_back(rms(cur.values));

  auto finish = [&](bool converged, std::string reason) {
    result.params = obj.params(x);
    result.residual_rms = rms(cur.values);
    result.converged = converged;
    result.stop_reason = std::move(reason);
    result.evaluations = obj.evaluations();
    return result;
  };

  double mu = 1e-3, nu = 2.0;
  int small_improvements = 0;
  bool fresh_point = true;  // x moved since the last Jacobian
  Eigen::MatrixXd jac, jtj;
  Eigen::VectorXd grad;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    result.iterations = iter;
    if (cost == 0.0) return finish(true, "zero residual");
    if (fresh_point) {
      jac = obj.jacobian(x, cur);
      jtj = jac.transpose() * jac;
      grad = jac.transpose() * cur.values;
      fresh_point = false;
    }

    // gradient components pushing against an active bound do not count
    double pg = 0.0;
    for (long i = 0; i < kDim; ++i) {
      const bool at_low = x[i] <= obj.low(i) && grad[i] > 0.0;
      const bool at_high = x[i] >= obj.high(i) && grad[i] < 0.0;
      if (!at_low && !at_high) pg = std::max(pg, std::abs(grad[i]));
    }
    if (pg <= settings.gradient_tol * std::max(cost, 1e-300)) {
      return finish(true, "projected gradient below tolerance");
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto sv = svd.singularValues();
    if (!(sv[kDim - 1] > settings.rank_tol * sv[0])) {
      result.method = "nelder-mead";
      const detail::SimplexOutcome nm =
          detail::nelder_mead(obj, x, cur.values.size(), settings.simplex_max_evaluations,
                              result.history);
      x = nm.x;
      cur = obj.evaluate(x);
      cost = 0.5 * cur.values.squaredNorm();
      return finish(nm.converged, nm.converged ? "simplex collapsed"
                                               : "simplex evaluation budget exhausted");
    }

    const Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * jtj.diagonal().maxCoeff());
    bool accepted = false;
    for (int attempt = 0; attempt < settings.max_damping_increases && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * diag;
      const Eigen::VectorXd dx = a.ldlt().solve(-grad);
      const Eigen::VectorXd x_trial = obj.project(x + dx);
      const Eigen::VectorXd step = x_trial - x;
      if (step.norm() <= 1e-14 * (x.norm() + 1e-14)) break;
      const double predicted = -(grad.dot(step) + 0.5 * step.dot(jtj * step));
      ResidualEvaluation trial = obj.evaluate(x_trial);
      const double cost_trial = 0.5 * trial.values.squaredNorm();
      const double rho = predicted > 0.0 ? (cost - cost_trial) / predicted : -1.0;
      if (cost_trial < cost && rho > 1e-4) {
        const double rel = (cost - cost_trial) / cost;
        small_improvements = rel < settings.improvement_tol ? small_improvements + 1 : 0;
        x = x_trial;
        cur = std::move(trial);
        fresh_point = true;
        cost = cost_trial;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        accepted = true;
      } else {
        mu *= nu;
        nu *= 2.0;
      }
    }
    // an iteration without an acceptable step improves by zero
    if (!accepted) ++small_improvements;
    result.history.push_back(rms(cur.values));
    if (small_improvements >= settings.improvement_window) {
      return finish(true, "relative improvement below tolerance");
    }
  }
  return finish(false, "iteration limit reached");
}

}  // namespace rfea
