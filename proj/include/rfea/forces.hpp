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

// Hydraulic, spring and damper laws of a single revolute joint. All
// coefficients are SI and per radian.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfea/errors.hpp"

namespace rfea {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

/// The seven identifiable coefficients plus the mass model.
///
/// Spring and damper laws are linear in the inner radius:
///   k(ri) = ri * m_k + k_0,  b(ri) = ri * m_b + b_0  (branch by sign of dtheta/dt).
struct MaterialParams {
  double k_0 = 1.0;       // [N m / rad]
  double m_k = 0.0;       // [N / rad]
  double b_0_pos = 0.01;  // [N m s / rad]
  double m_b_pos = 0.0;   // [N s / rad]
  double b_0_neg = 0.01;  // [N m s / rad]
  double m_b_neg = 0.0;   // [N s / rad]
  double r_hyd = 0.004;   // [m]
  double total_mass = 0.0132;  // [kg]
  double gravity = 9.81;       // [m / s^2]

  static constexpr std::size_t kIdentifiable = 7;
  static constexpr std::array<const char*, kIdentifiable> kNames = {
      "k_0", "m_k", "b_0_pos", "m_b_pos", "b_0_neg", "m_b_neg", "r_hyd"};

  std::array<double, kIdentifiable> identifiable() const {
    return {k_0, m_k, b_0_pos, m_b_pos, b_0_neg, m_b_neg, r_hyd};
  }

  void set_identifiable(std::span<const double> v) {
    if (v.size() != kIdentifiable) throw DomainError("MaterialParams: expected 7 values");
    k_0 = v[0];
    m_k = v[1];
    b_0_pos = v[2];
    m_b_pos = v[3];
    b_0_neg = v[4];
    m_b_neg = v[5];
    r_hyd = v[6];
  }

  /// Throws DomainError naming the first violated sign constraint.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw DomainError(std::string("material parameter ") + what);
    };
    require(k_0 > 0.0, "k_0 must be positive");
    require(m_k <= 0.0, "m_k must not be positive");
    require(b_0_pos > 0.0, "b_0_pos must be positive");
    require(b_0_neg > 0.0, "b_0_neg must be positive");
    require(r_hyd > 0.0, "r_hyd must be positive");
    require(total_mass > 0.0, "total_mass must be positive");
    require(gravity >= 0.0, "gravity must be non-negative");
    for (double v : identifiable()) require(std::isfinite(v), "values must be finite");
  }

  /// Per-joint coefficients of the same physical tube discretised with
  /// `to_segments` instead of `from_segments` joints. Joint stiffness and
  /// damping of a chain in series scale with the segment count.
  MaterialParams rescaled_segments(int from_segments, int to_segments) const {
    const double f = static_cast<double>(to_segments) / from_segments;
    MaterialParams out = *this;
    out.k_0 *= f;
    out.m_k *= f;
    out.b_0_pos *= f;
    out.m_b_pos *= f;
    out.b_0_neg *= f;
    out.m_b_neg *= f;
    return out;
  }
};

/// Hydraulic pressure history with piecewise-linear interpolation.
class PressureTrace {
 public:
  PressureTrace() = default;

  explicit PressureTrace(std::vector<std::pair<double, double>> samples)
      : samples_(std::move(samples)) {
    if (samples_.empty()) throw DomainError("pressure trace: no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto [t, p] = samples_[i];
      if (!std::isfinite(t) || !std::isfinite(p)) {
        throw DomainError("pressure trace: non-finite sample at index " + std::to_string(i));
      }
      if (p < 0.0) {
        throw DomainError("pressure trace: negative pressure at index " + std::to_string(i));
      }
      if (i > 0 && !(t > samples_[i - 1].first)) {
        throw DomainError("pressure trace: times not strictly increasing at index " +
                          std::to_string(i));
      }
    }
  }

  /// Constant pressure over [t0, t1].
  static PressureTrace constant(double p, double t0, double t1) {
    return PressureTrace({{t0, p}, {t1, p}});
  }

  const std::vector<std::pair<double, double>>& samples() const { return samples_; }
  double start_time() const { return samples_.front().first; }
  double end_time() const { return samples_.back().first; }

  bool covers(double t0, double t1) const {
    return !samples_.empty() && start_time() <= t0 && t1 <= end_time();
  }

  double operator()(double t) const { return at(t).first; }

  /// Pressure and its slope dp/dt at `t`. Times within a relative 1e-12 of
  /// the ends clamp to the end samples; farther outside throws.
  std::pair<double, double> at(double t) const {
    if (samples_.size() == 1) {
      if (t != samples_.front().first) throw DomainError("pressure trace: time out of range");
      return {samples_.front().second, 0.0};
    }
    const double span = end_time() - start_time();
    const double slack = 1e-12 * std::max(1.0, span);
    if (t < start_time() - slack || t > end_time() + slack) {
      throw DomainError("pressure trace: time " + std::to_string(t) + " outside [" +
                        std::to_string(start_time()) + ", " + std::to_string(end_time()) + "]");
    }
    t = std::clamp(t, start_time(), end_time());
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const auto& s) { return v < s.first; });
    if (it == samples_.end()) --it;
    if (it == samples_.begin()) ++it;
    const auto& [t1, p1] = *it;
    const auto& [t0, p0] = *(it - 1);
    const double slope = (p1 - p0) / (t1 - t0);
    if (t == t1) return {p1, slope};
    return {p0 + slope * (t - t0), slope};
  }

 private:
  std::vector<std::pair<double, double>> samples_;
};

inline double hydraulic_force(double p, double r_i) {
  if (p < 0.0) throw DomainError("hydraulic_force: negative pressure");
  if (!(r_i > 0.0)) throw DomainError("hydraulic_force: inner radius must be positive");
  return std::numbers::pi * r_i * r_i * p;
}

inline double hydraulic_torque(double p, double r_i, double r_hyd) {
  if (!(r_hyd > 0.0)) throw DomainError("hydraulic_torque: torque arm must be positive");
  return hydraulic_force(p, r_i) * r_hyd;
}

/// Hydraulic torque with the segment-inclination correction: the force acts
/// at distance R = sqrt(ro^2 + dL^2) under angle alpha = atan(dL / ro).
/// Note R cos(alpha) == ro, so this agrees with hydraulic_torque(p, ri, ro).
inline double hydraulic_torque_alpha(double p, double r_i, double r_o, double segment_length) {
  if (!(r_o > 0.0)) throw DomainError("hydraulic_torque_alpha: outer radius must be positive");
  if (segment_length < 0.0) throw DomainError("hydraulic_torque_alpha: negative segment length");
  // alpha is the angle at the joint of the right triangle with legs ro and
  // dL, so cos(alpha) = ro / R; std::cos(std::atan(.)) loses digits near pi/2
  const double arm = std::hypot(r_o, segment_length);
  const double cos_alpha = r_o / arm;
  return hydraulic_force(p, r_i) * (arm * cos_alpha);
}

/// A linear coefficient law evaluated with zero clamping.
struct Coefficient {
  double value = 0.0;
  bool clamped = false;  // the linear law went negative and was clamped to 0
  double slope = 0.0;    // d value / d ri (0 when clamped)
};

inline Coefficient clamped_linear(double r_i, double slope, double offset) {
  const double raw = r_i * slope + offset;
  if (raw < 0.0) return {0.0, true, 0.0};
  return {raw, false, slope};
}

inline Coefficient spring_coefficient(double r_i, const MaterialParams& params) {
  if (!(r_i > 0.0)) throw DomainError("spring_coefficient: inner radius must be positive");
  return clamped_linear(r_i, params.m_k, params.k_0);
}

enum class DampingBranch : unsigned char { kPositive, kNegative };

/// dtheta_dt == 0 belongs to the positive branch.
inline DampingBranch damping_branch(double dtheta_dt) {
  return dtheta_dt >= 0.0 ? DampingBranch::kPositive : DampingBranch::kNegative;
}

inline Coefficient damper_coefficient(double r_i, DampingBranch branch,
                                      const MaterialParams& params) {
  if (!(r_i > 0.0)) throw DomainError("damper_coefficient: inner radius must be positive");
  return branch == DampingBranch::kPositive
             ? clamped_linear(r_i, params.m_b_pos, params.b_0_pos)
             : clamped_linear(r_i, params.m_b_neg, params.b_0_neg);
}

/// Direction-dependent damping.
inline Coefficient damper_coefficient(double r_i, double dtheta_dt, const MaterialParams& params) {
  return damper_coefficient(r_i, damping_branch(dtheta_dt), params);
}

/// Hydraulic torque minus damping. The spring acts through the potential.
inline double joint_generalized_torque(double p, double r_i, double dtheta_dt,
                                       const MaterialParams& params) {
  return hydraulic_torque(p, r_i, params.r_hyd) -
         damper_coefficient(r_i, dtheta_dt, params).value * dtheta_dt;
}

}  // namespace rfea
