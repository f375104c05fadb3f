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

// Tube geometry and the incompressibility relations that tie the inner
// radius of each segment to its elongation.

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rfea/errors.hpp"

namespace rfea {

/// Fixed physical description of the elastomer tube.
///
/// The tube is split into `segment_count` equal rigid bodies; the segment
/// length doubles as the unstrained segment length used by the volume
/// balance.
class ActuatorGeometry {
 public:
  ActuatorGeometry() = default;

  ActuatorGeometry(double outer_radius, double initial_inner_radius,
                   double total_length, int segment_count)
      : outer_radius_(outer_radius),
        initial_inner_radius_(initial_inner_radius),
        total_length_(total_length),
        segment_count_(segment_count) {
    if (!(initial_inner_radius > 0.0) || !(initial_inner_radius < outer_radius)) {
      throw DomainError("geometry: require 0 < initial_inner_radius < outer_radius");
    }
    if (!(total_length > 0.0) || !std::isfinite(total_length)) {
      throw DomainError("geometry: total_length must be positive");
    }
    if (segment_count < 1) {
      throw DomainError("geometry: segment_count must be >= 1");
    }
  }

  double outer_radius() const { return outer_radius_; }
  double initial_inner_radius() const { return initial_inner_radius_; }
  double total_length() const { return total_length_; }
  int segment_count() const { return segment_count_; }
  double segment_length() const { return total_length_ / segment_count_; }
  double initial_segment_length() const { return segment_length(); }

  /// The same tube discretised into a different number of segments.
  ActuatorGeometry with_segments(int n) const {
    return ActuatorGeometry(outer_radius_, initial_inner_radius_, total_length_, n);
  }

 private:
  double outer_radius_ = 0.008;
  double initial_inner_radius_ = 0.006;
  double total_length_ = 0.155;
  int segment_count_ = 8;
};

struct SegmentGeometryState {
  double inner_radius = 0.0;
  double elongation = 0.0;
  double joint_angle = 0.0;
};

/// Rate of change of the inner radius of a segment whose elongation arc
/// changes at `ds_dt`, keeping the wall volume (s + L0)(ro^2 - ri^2) fixed.
inline double inner_radius_rate(double r_i, double r_o, double s, double L0, double ds_dt) {
  if (!(r_i > 0.0) || !(r_i < r_o)) {
    throw DomainError("inner_radius_rate: inner radius " + std::to_string(r_i) +
                      " outside (0, outer_radius)");
  }
  if (!(s + L0 > 0.0)) {
    throw DomainError("inner_radius_rate: segment length s + L0 must be positive");
  }
  return (r_o * r_o - r_i * r_i) / (2.0 * (s + L0) * r_i) * ds_dt;
}

inline double segment_volume_rate(double r_o, double r_i, double theta_j, double dtheta_dt,
                                  double dr_dt) {
  if (!(r_i > 0.0)) throw DomainError("segment_volume_rate: inner radius must be positive");
  return std::numbers::pi * r_o * r_i * (r_i * dtheta_dt + 2.0 * theta_j * dr_dt);
}

/// Local circular-arc elongation of a segment bent by `theta_j`.
inline double segment_elongation(double theta_j, double r_o) {
  if (theta_j < 0.0) {
    throw DomainError("segment_elongation: the actuator only bends in one direction (theta >= 0)");
  }
  return r_o * theta_j;
}

/// Inner radius after the tube of unstrained length `L0` has bent by
/// `theta_ss` under constant wall volume. Positive root only.
inline double steady_inner_radius(double theta_ss, double r_o, double L0, double r_i0) {
  if (theta_ss < 0.0) throw DomainError("steady_inner_radius: negative bending angle");
  const double len = r_o * theta_ss + L0;
  if (!(len > 0.0)) throw DomainError("steady_inner_radius: r_o * theta + L0 must be positive");
  return std::sqrt(len * (r_o * r_o * r_o * theta_ss + L0 * r_i0 * r_i0)) / len;
}

/// Conserved quantity of the incompressible wall: (s + L0)(ro^2 - ri^2).
inline double wall_volume_invariant(double s, double L0, double r_o, double r_i) {
  return (s + L0) * (r_o * r_o - r_i * r_i);
}

}  // namespace rfea
