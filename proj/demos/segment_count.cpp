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

// The same tube and pressure pulse discretised with 1 to 64 segments. Tip
// paths are compared with the 64-segment run.
//
//   demo_segment_count [peak_pa]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "rfea.hpp"

int main(int argc, char** argv) {
  const double peak = argc > 1 ? std::atof(argv[1]) : 2.7e5;
  try {
    const rfea::Preset base = rfea::preset("dof8");
    const rfea::PressureTrace trace = rfea::pulse_profile(peak, 0.05, 1.0);
    rfea::SimulationSettings st;
    st.output_rate_hz = 100.0;
    auto run = [&](int n) {
      const rfea::Preset p = rfea::preset_with_segments(base, n);
      const rfea::ChainModel m{p.geometry, p.params, true};
      return rfea::simulate(m, rfea::ChainState::rest(m.geometry), trace, trace.end_time(), st);
    };
    const rfea::Trajectory ref = run(64);
    std::printf("%9s %14s %14s %16s\n", "segments", "rms_dx_mm", "rms_dy_mm", "peak_bend_deg");
    for (int n : {1, 2, 4, 8, 16, 32, 64}) {
      const rfea::Trajectory tr = n == 64 ? ref : run(n);
      double sx = 0.0, sy = 0.0, peak_bend = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        sx += std::pow(tr.samples[i].tip.x - ref.samples[i].tip.x, 2);
        sy += std::pow(tr.samples[i].tip.y - ref.samples[i].tip.y, 2);
        peak_bend = std::max(peak_bend, tr.samples[i].bend_total);
      }
      const double count = static_cast<double>(ref.size());
      std::printf("%9d %14.4f %14.4f %16.4f\n", n, 1e3 * std::sqrt(sx / count),
                  1e3 * std::sqrt(sy / count), peak_bend * rfea::kDegPerRad);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
