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

// Built-in parameter sets and standard pressure profiles.

#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"

namespace rfea {

inline constexpr double kPdmsDensity = 965.0;  // [kg / m^3]

/// Mass of the elastomer wall, density * pi (ro^2 - ri0^2) L.
inline double tube_mass(const ActuatorGeometry& g, double density = kPdmsDensity) {
  const double ro = g.outer_radius(), ri = g.initial_inner_radius();
  return density * std::numbers::pi * (ro * ro - ri * ri) * g.total_length();
}

/// Per-degree coefficients with offsets given at the unpressurised inner
/// radius.
struct DegreeTable {
  double k_0;      // [N m / deg]
  double m_k;      // [N / deg]
  double b_0_pos;  // [N m s / deg]
  double m_b_pos;  // [N s / deg]
  double b_0_neg;  // [N m s / deg]
  double m_b_neg;  // [N s / deg]
  double r_hyd;    // [m]
};

inline constexpr DegreeTable kNominal8Dof{0.045257,   -14.101,  0.00032813, -0.098948,
                                           0.00058815, -0.18966, 0.0035644};
inline constexpr DegreeTable kNominal2Dof{0.00075223, -0.00029452, 2.6171e-05, -0.0038529,
                                           3.7374e-08, -3.0518e-05, 0.0037125};

/// Per-radian parameters whose linear laws take the table offsets at r_i0:
/// offset = table value - slope * r_i0.
inline MaterialParams params_from_degree_table(const DegreeTable& t, double r_i0) {
  MaterialParams p;
  p.m_k = t.m_k * kDegPerRad;
  p.k_0 = t.k_0 * kDegPerRad - p.m_k * r_i0;
  p.m_b_pos = t.m_b_pos * kDegPerRad;
  p.b_0_pos = t.b_0_pos * kDegPerRad - p.m_b_pos * r_i0;
  p.m_b_neg = t.m_b_neg * kDegPerRad;
  p.b_0_neg = t.b_0_neg * kDegPerRad - p.m_b_neg * r_i0;
  p.r_hyd = t.r_hyd;
  return p;
}

struct Preset {
  ActuatorGeometry geometry;
  MaterialParams params;
};

/// "dof8": the 8-segment tube seeded from the nominal 8-segment table.
/// "dof2": the same physical tube with two segments. Joint coefficients are
/// rescaled from the 8-segment set. Read in SI units, the nominal 2-segment
/// table would bend the tube by about 5 rad at 270 kPa, so it is kept for
/// reference only.
inline std::optional<Preset> find_preset(std::string_view name) {
  const ActuatorGeometry g8(0.008, 0.006, 0.155, 8);
  MaterialParams p8 = params_from_degree_table(kNominal8Dof, g8.initial_inner_radius());
  p8.total_mass = tube_mass(g8);
  if (name == "dof8") return Preset{g8, p8};
  if (name == "dof2") return Preset{g8.with_segments(2), p8.rescaled_segments(8, 2)};
  return std::nullopt;
}

inline Preset preset(std::string_view name) {
  auto p = find_preset(name);
  if (!p) throw ConfigError("unknown preset '" + std::string(name) + "'");
  return *p;
}

/// The same tube with `n` segments and rescaled joint coefficients.
inline Preset preset_with_segments(const Preset& base, int n) {
  return {base.geometry.with_segments(n),
          base.params.rescaled_segments(base.geometry.segment_count(), n)};
}

/// Piecewise-linear staircase: starting at 0 Pa, move to each level over
/// `ramp_s` and hold it for `hold_s`.
inline PressureTrace staircase_profile(const std::vector<double>& levels, double ramp_s,
                                       double hold_s, double t0 = 0.0) {
  if (!(ramp_s > 0.0) || !(hold_s > 0.0)) {
    throw DomainError("staircase_profile: ramp and hold must be positive");
  }
  std::vector<std::pair<double, double>> knots{{t0, 0.0}, {t0 + hold_s, 0.0}};
  double t = t0 + hold_s;
  for (double level : levels) {
    knots.emplace_back(t += ramp_s, level);
    knots.emplace_back(t += hold_s, level);
  }
  return PressureTrace(std::move(knots));
}

/// Rise from 0 to `peak` over `ramp_s`, hold, release over `ramp_s`, hold.
inline PressureTrace pulse_profile(double peak, double ramp_s, double hold_s) {
  return staircase_profile({peak, 0.0}, ramp_s, hold_s);
}

}  // namespace rfea
