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

// Forward kinematics of the segment chain. The base sits at the origin,
// the unbent tube hangs along -Y and positive joint angles bend toward -X.

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace rfea {

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

inline double total_bending(std::span<const double> q) {
  double sum = 0.0;
  for (double v : q) sum += v;
  return sum;
}

/// Joint positions P_0 (base) .. P_n (tip).
inline std::vector<PlanarPoint> backbone_shape(std::span<const double> q, double segment_length) {
  std::vector<PlanarPoint> pts;
  pts.reserve(q.size() + 1);
  pts.push_back({0.0, 0.0});
  double phi = 0.0;
  PlanarPoint p;
  for (double qj : q) {
    phi += qj;
    p.x -= segment_length * std::sin(phi);
    p.y -= segment_length * std::cos(phi);
    pts.push_back(p);
  }
  return pts;
}

inline PlanarPoint tip_position(std::span<const double> q, double segment_length) {
  double phi = 0.0;
  PlanarPoint p;
  for (double qj : q) {
    phi += qj;
    p.x -= segment_length * std::sin(phi);
    p.y -= segment_length * std::cos(phi);
  }
  return p;
}

}  // namespace rfea
