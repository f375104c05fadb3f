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

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "rfea/identification.hpp"
#include "rfea/presets.hpp"
#include "rfea/steady_state.hpp"
#include "test_support.hpp"

namespace rfea {
namespace {

using testing::Gen;

// Two segments and a 1.25 s staircase keep each simulation near 40 ms.
SimulationSettings quick_settings() {
  SimulationSettings s = fit_simulation_defaults();
  s.rel_tol = 1e-6;
  s.abs_tol = 1e-8;
  return s;
}

PressureTrace short_staircase() { return staircase_profile({2e5, 6e4, 0.0}, 0.05, 0.3); }

FitProblem synthetic_problem(const Preset& truth, const PressureTrace& trace,
                             double rate_hz = 100.0) {
  FitProblem fp;
  fp.trace = trace;
  fp.geometry = truth.geometry;
  fp.simulation = quick_settings();
  SimulationSettings st = fp.simulation;
  st.output_rate_hz = rate_hz;
  const ChainModel m{truth.geometry, truth.params, true};
  fp.measured = MeasuredTrajectory::from_trajectory(
      simulate(m, ChainState::rest(truth.geometry), trace, trace.end_time(), st), "synthetic");
  fp.initial_guess = truth.params;
  return fp;
}

MaterialParams scaled(const MaterialParams& p, const std::array<double, 7>& factors) {
  ParamVector v = p.identifiable();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= factors[i];
  MaterialParams out = p;
  out.set_identifiable(v);
  return out;
}

const Preset& dof2() {
  static const Preset p = preset("dof2");
  return p;
}

TEST(Residual, VanishesAtTheGeneratingParameters) {
  const FitProblem fp = synthetic_problem(dof2(), short_staircase());
  const ResidualEvaluation r = evaluate_residual(dof2().params, fp);
  EXPECT_FALSE(r.penalized);
  EXPECT_EQ(r.values.size(), static_cast<long>(fp.measured.samples.size()));
  EXPECT_LT(rms(r.values), 1e-9);
  FitProblem xy = fp;
  xy.objective = Objective::kTipXY;
  const Eigen::VectorXd both = residual(dof2().params, xy);
  EXPECT_EQ(both.size(), 2 * r.values.size());
  EXPECT_LT(rms(both), 1e-9);
}

// Every small move away from the truth shows up in the tip height, and the
// residual grows linearly with the size of the move.
TEST(Residual, GrowsAlongPerturbationDirections) {
  const FitProblem fp = synthetic_problem(dof2(), short_staircase());
  Gen g(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 7> dir;
    for (double& d : dir) d = g.normal(1.0);
    auto at = [&](double eps) {
      std::array<double, 7> f;
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + eps * dir[i];
      return rms(residual(scaled(dof2().params, f), fp));
    };
    const double small = at(1e-3), large = at(2e-3);
    EXPECT_GT(small, 1e-7) << trial;
    EXPECT_NEAR(large / small, 2.0, 0.1) << trial;
  }
}

// With no spring and a joint spun backwards the radius collapses; the
// residual turns into the constant penalty instead of propagating NaNs.
TEST(Residual, FailedSimulationIsPenalized) {
  const Preset one = preset_with_segments(preset("dof8"), 1);
  FitProblem fp = synthetic_problem(one, PressureTrace::constant(0.0, 0.0, 1.0));
  ChainState s = ChainState::rest(one.geometry);
  s.q_dot[0] = -20.0;
  fp.initial_state = s;
  MaterialParams p = one.params;
  p.m_k = -1e5;
  p.b_0_pos = p.b_0_neg = 1e-9;
  p.m_b_pos = p.m_b_neg = 0.0;
  fp.gravity_enabled = false;
  const ResidualEvaluation r = evaluate_residual(p, fp);
  EXPECT_TRUE(r.penalized);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_EQ(r.values, Eigen::VectorXd::Constant(r.values.size(), kFailurePenalty));

  ParamVector outside = one.params.identifiable();
  outside[6] = 0.006;
  MaterialParams q = one.params;
  q.set_identifiable(outside);
  EXPECT_THROW(evaluate_residual(q, fp), DomainError);
}

std::vector<std::pair<double, double>> steady_points(const Preset& truth,
                                                     std::initializer_list<double> pressures) {
  std::vector<std::pair<double, double>> out;
  for (double p : pressures) {
    out.emplace_back(p, solve_bending(p, truth.geometry, truth.params).theta_ss);
  }
  return out;
}

TEST(InitialGuessFromSteady, RecoversTheLinearSpringLaw) {
  const Preset truth = preset("dof8");
  const auto pts = steady_points(truth, {0.0, 1e5, 1.8e5, 2.7e5, 3.5e5});
  const MaterialParams g =
      initial_guess_from_steady(pts, truth.geometry, truth.params, truth.params.r_hyd);
  EXPECT_LT(testing::rel_err(g.k_0, truth.params.k_0), 1e-7);
  EXPECT_LT(testing::rel_err(g.m_k, truth.params.m_k), 1e-6);
  EXPECT_EQ(g.r_hyd, truth.params.r_hyd);
  EXPECT_GT(g.b_0_pos, 0.0);
  EXPECT_GT(g.b_0_neg, 0.0);
  EXPECT_NO_THROW(g.validate());
}

TEST(InitialGuessFromSteady, ConstantSpringGivesZeroSlope) {
  Preset truth = preset("dof8");
  truth.params.m_k = 0.0;
  const auto pts = steady_points(truth, {1e5, 2e5, 4e5});
  const MaterialParams g =
      initial_guess_from_steady(pts, truth.geometry, truth.params, truth.params.r_hyd);
  EXPECT_NEAR(g.m_k, 0.0, 1e-6 * truth.params.k_0 / 0.006);
  EXPECT_LT(testing::rel_err(g.k_0, truth.params.k_0), 1e-9);
}

TEST(InitialGuessFromSteady, RejectsInsufficientData) {
  const Preset truth = preset("dof8");
  EXPECT_THROW(initial_guess_from_steady(steady_points(truth, {2e5}), truth.geometry), DataError);
  EXPECT_THROW(initial_guess_from_steady(steady_points(truth, {0.0, 2e5}), truth.geometry),
               DataError);
  EXPECT_THROW(initial_guess_from_steady({{1e5, 0.1}, {1e5, 0.1}}, truth.geometry), DataError);
  EXPECT_THROW(initial_guess_from_steady({{1e5, 0.0}, {2e5, 0.2}}, truth.geometry), DataError);
  EXPECT_THROW(initial_guess_from_steady({{-1.0, 0.1}, {2e5, 0.2}}, truth.geometry), DataError);
  EXPECT_THROW(initial_guess_from_steady(steady_points(truth, {1e5, 2e5}), truth.geometry, {}, 0.0),
               DomainError);
}

TEST(Fit, RecoversParametersFromTwentyPercentGuess) {
  FitProblem fp = synthetic_problem(dof2(), short_staircase());
  fp.initial_guess = scaled(dof2().params, {1.2, 0.8, 1.2, 0.8, 0.8, 1.2, 1.1});
  const FitResult r = fit(fp);
  EXPECT_TRUE(r.converged) << r.stop_reason;
  EXPECT_EQ(r.method, "levenberg-marquardt");
  EXPECT_LT(r.residual_rms, 1e-7);
  const ParamVector want = dof2().params.identifiable(), got = r.params.identifiable();
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_LT(testing::rel_err(got[i], want[i]), 0.05) << MaterialParams::kNames[i];
  }
  EXPECT_EQ(r.params.total_mass, fp.initial_guess.total_mass);
  ASSERT_GE(r.history.size(), 2u);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
  EXPECT_EQ(r.history.back(), r.residual_rms);
}

// Gaussian noise on the tip: the fit cannot beat the noise floor by much,
// nor should it leave much more than the noise behind.
TEST(Fit, NoisyMeasurementsResidualStaysNearNoiseLevel) {
  const FitProblem clean = synthetic_problem(dof2(), short_staircase());
  const double sigma = 5e-4;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    FitProblem fp = clean;
    Gen g(seed);
    for (auto& s : fp.measured.samples) {
      s.tip_x += g.normal(sigma);
      s.tip_y += g.normal(sigma);
    }
    fp.initial_guess = scaled(dof2().params, {1.1, 0.9, 1.1, 0.9, 0.9, 1.1, 1.05});
    FitSettings st;
    st.max_iterations = 25;
    const FitResult r = fit(fp, st);
    EXPECT_LE(r.residual_rms, 2 * sigma) << "seed " << seed;
    EXPECT_GT(r.residual_rms, 0.5 * sigma) << "seed " << seed;
    EXPECT_LE(r.residual_rms, r.history.front());
  }
}

TEST(Fit, CandidatesNeverLeaveTheBounds) {
  FitProblem fp = synthetic_problem(dof2(), short_staircase());
  const ParamVector truth = dof2().params.identifiable();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double a = 0.85 * truth[i], b = 1.15 * truth[i];
    fp.bounds.low[i] = std::min(a, b);
    fp.bounds.high[i] = std::max(a, b);
  }
  fp.bounds.low[6] = std::max(fp.bounds.low[6], 0.003);
  for (int corner = 0; corner < 2; ++corner) {
    // start outside the box: the guess is clipped onto a corner
    const std::array<double, 7> low{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
        high{2, 2, 2, 2, 2, 2, 1.3};
    fp.initial_guess = scaled(dof2().params, corner == 0 ? low : high);
    std::atomic<long> outside{0}, seen{0};
    FitSettings st;
    st.max_iterations = 8;
    st.on_candidate = [&](const MaterialParams& p) {
      ++seen;
      if (!fp.bounds.contains(p.identifiable())) ++outside;
    };
    const FitResult r = fit(fp, st);
    EXPECT_GT(seen.load(), 8);
    EXPECT_EQ(outside.load(), 0);
    EXPECT_TRUE(fp.bounds.contains(r.params.identifiable()));
    EXPECT_LT(r.residual_rms, r.history.front());
  }
}

TEST(Fit, DeterministicAndThreadCountIndependent) {
  FitProblem fp = synthetic_problem(dof2(), short_staircase());
  fp.initial_guess = scaled(dof2().params, {1.2, 0.8, 1.2, 0.8, 0.8, 1.2, 1.1});
  FitSettings st;
  st.max_iterations = 4;
  const FitResult a = fit(fp, st), b = fit(fp, st);
  st.threads = 4;
  const FitResult c = fit(fp, st);
  EXPECT_EQ(a.params.identifiable(), b.params.identifiable());
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.params.identifiable(), c.params.identifiable());
  EXPECT_EQ(a.history, c.history);
  EXPECT_EQ(a.evaluations, c.evaluations);
}

TEST(Fit, IterationLimitIsReportedAsNotConverged) {
  FitProblem fp = synthetic_problem(dof2(), short_staircase());
  fp.initial_guess = scaled(dof2().params, {1.2, 0.8, 1.2, 0.8, 0.8, 1.2, 1.1});
  FitSettings st;
  st.max_iterations = 1;
  const FitResult r = fit(fp, st);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.stop_reason, "iteration limit reached");
  EXPECT_EQ(r.history.size(), 2u);
  st.max_iterations = 0;
  EXPECT_THROW(fit(fp, st), DomainError);
}

// A coarser chain fitted to the tip height of a finer one: the model error
// stays small against the bending amplitude.
TEST(Fit, TwoSegmentModelTracksEightSegmentHeight) {
  const Preset fine = preset("dof8");
  const PressureTrace trace = short_staircase();
  FitProblem fp = synthetic_problem(fine, trace);
  fp.geometry = dof2().geometry;
  fp.initial_guess = dof2().params;
  const double start = rms(residual(fp.initial_guess, fp));
  FitSettings st;
  st.max_iterations = 20;
  const FitResult r = fit(fp, st);
  EXPECT_LT(r.residual_rms, start);
  EXPECT_LT(r.residual_rms, 1e-3);
}

// Without a release the negative damper branch never acts, its columns of
// the Jacobian vanish, and the fit hands over to the simplex search.
TEST(Fit, RankDeficientProblemFallsBackToSimplex) {
  const Preset one = preset_with_segments(preset("dof8"), 1);
  const PressureTrace rising({{0.0, 0.0}, {0.5, 1.5e5}});
  FitProblem fp = synthetic_problem(one, rising);
  fp.initial_guess = scaled(one.params, {1.1, 0.9, 1.1, 0.9, 0.9, 1.1, 1.05});
  fp.gravity_enabled = true;
  FitSettings st;
  st.simplex_max_evaluations = 150;
  const FitResult r = fit(fp, st);
  EXPECT_EQ(r.method, "nelder-mead");
  EXPECT_LT(r.residual_rms, r.history.front());
  EXPECT_TRUE(fp.bounds.contains(r.params.identifiable()));
  EXPECT_NE(r.params.k_0, fp.initial_guess.k_0);
}

TEST(FitProblem, ValidateRejectsInconsistentData) {
  const FitProblem good = synthetic_problem(dof2(), short_staircase());
  EXPECT_NO_THROW(good.validate());

  FitProblem fp = good;
  fp.measured.samples.clear();
  EXPECT_THROW(fp.validate(), DataError);

  fp = good;
  fp.measured.samples[3].t = fp.measured.samples[2].t;
  EXPECT_THROW(fp.validate(), DataError);

  fp = good;
  fp.measured.samples[5].tip_y = NAN;
  EXPECT_THROW(fp.validate(), DataError);

  fp = good;
  fp.measured.samples.push_back({good.trace.end_time() + 1.0, 0.0, 0.0});
  EXPECT_THROW(fp.validate(), DataError);

  fp = good;
  fp.bounds.high[1] = 1.0;
  EXPECT_THROW(fp.validate(), DomainError);

  fp = good;
  fp.bounds.high[6] = 0.006;
  EXPECT_THROW(fp.validate(), DomainError);
  EXPECT_THROW(fit(fp), DomainError);
}

}  // namespace
}  // namespace rfea
