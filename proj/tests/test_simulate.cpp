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

#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "rfea/simulate.hpp"
#include "rfea/steady_state.hpp"
#include "test_support.hpp"

namespace rfea {
namespace {

using testing::model_for;
using testing::rel_err;

PressureTrace ramp_to(double p, double ramp_s, double t_end) {
  return PressureTrace({{0.0, 0.0}, {ramp_s, p}, {t_end, p}});
}

double worst_volume_drift(const Trajectory& tr, const ChainModel& m) {
  const double ro = m.geometry.outer_radius(), L0 = m.geometry.segment_length();
  const double v0 = wall_volume_invariant(0.0, L0, ro, m.geometry.initial_inner_radius());
  double worst = 0.0;
  for (const auto& s : tr.samples) {
    for (int j = 0; j < s.state.size(); ++j) {
      const double v = wall_volume_invariant(ro * s.state.q[j], L0, ro, s.state.r_inner[j]);
      worst = std::max(worst, std::abs(v / v0 - 1.0));
    }
  }
  return worst;
}

/// Largest |E(t) - E(0) - W(t)| relative to the largest |E(t) - E(0)|.
double energy_audit(const Trajectory& tr) {
  const auto& first = tr.samples.front();
  const double e0 = first.kinetic + first.potential.total();
  double worst = 0.0, peak = 0.0;
  for (const auto& s : tr.samples) {
    const double de = s.kinetic + s.potential.total() - e0;
    worst = std::max(worst, std::abs(de - s.force_work - s.parametric_work));
    peak = std::max(peak, std::abs(de));
  }
  return worst / peak;
}

TEST(Simulate, UnloadedTubeWithoutGravityStaysAtRest) {
  const ChainModel m = model_for(8, false);
  const auto tr = simulate(m, ChainState::rest(m.geometry), PressureTrace::constant(0, 0, 5), 5.0);
  ASSERT_EQ(tr.size(), 501u);
  for (const auto& s : tr.samples) {
    EXPECT_EQ(s.state.q.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.state.q_dot.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.state.r_inner, ChainState::rest(m.geometry).r_inner);
  }
}

TEST(Simulate, OutputGridAndStartTime) {
  const ChainModel m = model_for(2);
  SimulationSettings st;
  st.output_rate_hz = 40.0;
  const auto tr =
      simulate(m, ChainState::rest(m.geometry, 1.0), PressureTrace::constant(1e5, 1.0, 2.0), 2.0, st);
  ASSERT_EQ(tr.size(), 41u);
  EXPECT_EQ(tr.samples.front().state.time, 1.0);
  EXPECT_EQ(tr.samples.back().state.time, 2.0);
  EXPECT_NEAR(tr.samples[10].state.time, 1.25, 1e-15);
  EXPECT_EQ(tr.segment_count, 2);
  EXPECT_GT(tr.steps_taken, 0);
}

TEST(Simulate, PreconditionsAreChecked) {
  const ChainModel m = model_for(2);
  const auto rest = ChainState::rest(m.geometry);
  const auto trace = PressureTrace::constant(1e5, 0.0, 1.0);
  EXPECT_THROW(simulate(m, rest, trace, 0.0), DomainError);
  EXPECT_THROW(simulate(m, rest, trace, 1.5), DomainError);
  EXPECT_THROW(simulate(m, ChainState::rest(model_for(3).geometry), trace, 1.0), DomainError);
  const std::vector<double> backwards{0.5, 0.4};
  EXPECT_THROW(simulate_at(m, rest, trace, backwards), DomainError);
  ChainModel bad = m;
  bad.params.k_0 = -1.0;
  EXPECT_THROW(simulate(bad, rest, trace, 1.0), DomainError);
}

TEST(Simulate, DeterministicBitForBit) {
  const ChainModel m = model_for(8);
  const auto trace = staircase_profile({2e5, 5e4}, 0.05, 0.3);
  const auto a = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time());
  const auto b = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.samples[i].state;
    const auto& y = b.samples[i].state;
    EXPECT_EQ(std::memcmp(x.q.data(), y.q.data(), sizeof(double) * x.q.size()), 0);
    EXPECT_EQ(std::memcmp(x.q_dot.data(), y.q_dot.data(), sizeof(double) * x.q.size()), 0);
    EXPECT_EQ(std::memcmp(x.r_inner.data(), y.r_inner.data(), sizeof(double) * x.q.size()), 0);
  }
}

TEST(Simulate, IncompressibilityAndEnergyBalanceOverLongRamp) {
  const ChainModel m = model_for(8);
  const auto tr = simulate(m, ChainState::rest(m.geometry), ramp_to(2.7e5, 1.0, 10.0), 10.0);
  EXPECT_LT(worst_volume_drift(tr, m), 1e-6);
  EXPECT_LT(energy_audit(tr), 1e-5);
}

TEST(Simulate, ZeroGravityTerminalAngleMatchesSteadySolution) {
  const ChainModel m = model_for(8, false);
  const double p = 2.7e5;
  const auto tr = simulate(m, ChainState::rest(m.geometry), ramp_to(p, 0.2, 20.0), 20.0);
  const double theta = tr.samples.back().bend_total;
  const SteadySolution ss = solve_bending(p, m.geometry, m.params);
  EXPECT_LT(rel_err(theta, ss.theta_ss), 1e-2);
}

// Step to 270 kPa under gravity: bounded rise that settles.
TEST(Simulate, StepResponseRisesAndSettles) {
  const ChainModel m = model_for(8);
  const auto tr = simulate(m, ChainState::rest(m.geometry), ramp_to(2.7e5, 0.01, 6.0), 6.0);
  const double final_bend = tr.samples.back().bend_total;
  double peak = 0.0;
  for (const auto& s : tr.samples) {
    peak = std::max(peak, s.bend_total);
    EXPECT_GE(s.state.r_inner.minCoeff(), m.geometry.initial_inner_radius() - 1e-9);
    EXPECT_LT(s.state.r_inner.maxCoeff(), m.geometry.outer_radius());
  }
  EXPECT_GT(final_bend, 0.1);
  EXPECT_LT(peak, 1.5 * final_bend);
  EXPECT_LT(tr.samples.back().state.q_dot.cwiseAbs().maxCoeff(), 1e-3);
  // the last second is flat
  const auto& late = tr.samples[tr.size() - 101];
  EXPECT_NEAR(late.bend_total, final_bend, 1e-3 * final_bend);
}

TEST(Simulate, ExplicitAndRosenbrockAgree) {
  const ChainModel m = model_for(3);
  const auto trace = staircase_profile({1.5e5, 0.0}, 0.05, 0.2);
  SimulationSettings st;
  st.abs_tol = 1e-10;
  st.rel_tol = 1e-8;
  const auto a = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time(), st);
  st.integrator = IntegratorKind::kDopri5;
  const auto b = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time(), st);
  ASSERT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.samples[i].tip.x - b.samples[i].tip.x));
  }
  EXPECT_LT(worst, 1e-7);
}

TEST(Simulate, ReplayedStepsReproduceTheRun) {
  const ChainModel m = model_for(4);
  const auto trace = staircase_profile({2e5, 0.0}, 0.05, 0.2);
  SimulationSettings st;
  st.record_steps = true;
  const auto a = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time(), st);
  ASSERT_EQ(static_cast<long>(a.step_times.size()), a.steps_taken);
  st.replay_steps = a.step_times;
  const auto b = simulate(m, ChainState::rest(m.geometry), trace, trace.end_time(), st);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].state.q, b.samples[i].state.q);
  }
  st.replay_steps = {0.1, 0.05};
  EXPECT_THROW(simulate(m, ChainState::rest(m.geometry), trace, trace.end_time(), st),
               DomainError);
}

// A free joint spun backwards shortens its segment until the inner radius
// collapses, which must surface as an integration error rather than NaNs.
TEST(Simulate, RadiusCollapseRaisesIntegrationError) {
  ChainModel m = model_for(1, false);
  m.params.m_k = -1e5;  // spring law clamps to zero
  m.params.b_0_pos = m.params.b_0_neg = 1e-9;
  m.params.m_b_pos = m.params.m_b_neg = 0.0;
  ChainState s = ChainState::rest(m.geometry);
  s.q_dot[0] = -20.0;
  EXPECT_THROW(simulate(m, s, PressureTrace::constant(0.0, 0.0, 1.0), 1.0), NumericError);
}

TEST(Simulate, UnforcedMotionOnlyLosesEnergy) {
  for (int n : {1, 3, 8}) {
    const ChainModel m = model_for(n);
    ChainState s = ChainState::rest(m.geometry);
    s.q.setConstant(0.05);
    s.q_dot.setConstant(1.0);
    const double ri = steady_inner_radius(0.05, m.geometry.outer_radius(),
                                          m.geometry.segment_length(),
                                          m.geometry.initial_inner_radius());
    s.r_inner.setConstant(ri);
    SimulationSettings st;
    st.output_rate_hz = 500.0;
    const auto tr = simulate(m, s, PressureTrace::constant(0.0, 0.0, 2.0), 2.0, st);
    double scale = 0.0;
    for (const auto& x : tr.samples) scale = std::max(scale, std::abs(x.kinetic + x.potential.total()));
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const double before = tr.samples[i - 1].kinetic + tr.samples[i - 1].potential.total();
      const double after = tr.samples[i].kinetic + tr.samples[i].potential.total();
      EXPECT_LE(after - before, 1e-12 * scale) << "n=" << n << " sample " << i;
    }
  }
}

}  // namespace
}  // namespace rfea
