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
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "rfea/dynamics.hpp"
#include "rfea/simulate.hpp"
#include "test_support.hpp"

namespace rfea {
namespace {

using testing::Gen;
using testing::model_for;
using testing::random_state;
using testing::rel_err;

TEST(SegmentInertia, Limits) {
  EXPECT_DOUBLE_EQ(segment_inertia(0.2, 0.0, 0.0, 0.155), 0.2 * 0.155 * 0.155 / 12);
  EXPECT_DOUBLE_EQ(segment_inertia(0.2, 0.008, 0.006, 0.0), 0.2 * 3 * (6.4e-5 + 3.6e-5) / 12);
  EXPECT_NEAR(segment_inertia(0.01, 0.008, 0.006, 0.019375),
              0.01 * (3 * (6.4e-5 + 3.6e-5) + 0.019375 * 0.019375) / 12, 1e-22);
  EXPECT_NEAR(segment_inertia(0.01, 0.008, 0.006, 0.019375), 5.628e-7, 1e-10);
}

TEST(KineticEnergy, ZeroAtRest) {
  const ChainModel m = model_for(4);
  ChainState s = ChainState::rest(m.geometry);
  s.q.setConstant(0.3);
  EXPECT_EQ(kinetic_energy(s, m), 0.0);
}

TEST(KineticEnergy, SinglePendulum) {
  const ChainModel m = model_for(1);
  ChainState s = ChainState::rest(m.geometry);
  s.q[0] = 0.4;
  s.q_dot[0] = 1.7;
  const auto props = m.body_props(s.r_inner[0]);
  EXPECT_NEAR(kinetic_energy(s, m),
              0.5 * (props.mass * props.l_c * props.l_c + props.I_xx) * 1.7 * 1.7, 1e-18);
}

TEST(KineticEnergy, MatchesDifferentiatedPositions) {
  Gen g(21);
  for (int n : {2, 3, 8}) {
    const ChainModel m = model_for(n);
    for (int i = 0; i < 50; ++i) {
      const ChainState s = random_state(m, g);
      EXPECT_LT(rel_err(kinetic_energy(s, m), testing::kinetic_energy_oracle(s, m)), 1e-8);
    }
  }
}

TEST(PotentialEnergy, StraightTubeHasOnlyGravity) {
  const ChainModel m = model_for(3);
  const ChainState s = ChainState::rest(m.geometry);
  const auto u = potential_energy_terms(s, m);
  EXPECT_EQ(u.spring, 0.0);
  // centres at -dL/2, -3dL/2, -5dL/2
  const double dL = m.geometry.segment_length();
  EXPECT_NEAR(u.gravity, -m.segment_mass() * m.g() * 4.5 * dL, 1e-15);
}

TEST(PotentialEnergy, SingleSpringWithoutGravity) {
  const ChainModel m = model_for(1, false);
  ChainState s = ChainState::rest(m.geometry);
  s.q[0] = 0.7;
  const double k = spring_coefficient(s.r_inner[0], m.params).value;
  EXPECT_NEAR(potential_energy(s, m), 0.5 * k * 0.49, 1e-15);
}

TEST(PotentialEnergy, MatchesOracle) {
  Gen g(5);
  const ChainModel m = model_for(5);
  for (int i = 0; i < 30; ++i) {
    const ChainState s = random_state(m, g);
    EXPECT_LT(rel_err(potential_energy(s, m), testing::potential_energy_oracle(s, m)), 1e-12);
  }
}

TEST(PotentialGradient, MatchesCentralDifferences) {
  Gen g(8);
  for (int n : {2, 8}) {
    const ChainModel m = model_for(n);
    for (int i = 0; i < 100; ++i) {
      const ChainState s = random_state(m, g);
      auto U = [&](const Eigen::VectorXd& q) {
        ChainState x = s;
        x.q = q;
        return testing::potential_energy_oracle(x, m);
      };
      Eigen::VectorXd fd(n);
      for (int j = 0; j < n; ++j) fd[j] = testing::central4(U, s.q, j, 1e-4);
      EXPECT_LT(rel_err(potential_gradient(s, m), fd), 1e-6);
    }
  }
}

TEST(MassMatrix, SingleBodyScalar) {
  const ChainModel m = model_for(1);
  const ChainState s = ChainState::rest(m.geometry);
  const auto props = m.body_props(s.r_inner[0]);
  const Eigen::MatrixXd M = mass_matrix(s, m);
  ASSERT_EQ(M.rows(), 1);
  EXPECT_LT(rel_err(M(0, 0), props.mass * props.l_c * props.l_c + props.I_xx), 1e-14);
}

TEST(MassMatrix, SymmetricPositiveDefiniteAndMatchesEnergyHessian) {
  Gen g(13);
  for (int n : {1, 2, 3, 8}) {
    const ChainModel m = model_for(n);
    for (int i = 0; i < 100; ++i) {
      const ChainState s = random_state(m, g);
      const Eigen::MatrixXd M = mass_matrix(s, m);
      EXPECT_LE((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
      EXPECT_NEAR(0.5 * s.q_dot.dot(M * s.q_dot), kinetic_energy(s, m),
                  1e-12 * kinetic_energy(s, m));
      if (n <= 3) {
        EXPECT_LT(rel_err(M, testing::mass_matrix_oracle(s, m)), 1e-6);
      }
    }
  }
}

TEST(MassMatrix, ConditionBoundRaisesSingularMatrixError) {
  ChainModel m = model_for(3);
  m.max_condition = 1.0;
  const ChainState s = ChainState::rest(m.geometry);
  EXPECT_THROW(mass_matrix(s, m), SingularMatrixError);
  EXPECT_THROW(state_derivative(s, 0.0, m), SingularMatrixError);
}

TEST(BiasVector, ZeroAtUnforcedEquilibrium) {
  const ChainModel m = model_for(4, false);
  const ChainState s = ChainState::rest(m.geometry);
  EXPECT_EQ(bias_vector(s, m).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BiasVector, StaticStateGivesNegativePotentialGradient) {
  Gen g(17);
  const ChainModel m = model_for(5);
  for (int i = 0; i < 20; ++i) {
    ChainState s = random_state(m, g);
    s.q_dot.setZero();
    EXPECT_EQ(bias_vector(s, m), -potential_gradient(s, m));
  }
}

TEST(BiasVector, MatchesLagrangianOracle) {
  Gen g(19);
  for (int n : {1, 2, 3}) {
    const ChainModel m = model_for(n);
    for (int i = 0; i < 100; ++i) {
      const ChainState s = random_state(m, g);
      EXPECT_LT(rel_err(bias_vector(s, m), testing::bias_oracle(s, m)), 1e-6) << "n=" << n;
    }
  }
}

TEST(StateDerivative, RestIsAFixedPointWithoutLoad) {
  const ChainModel m = model_for(6, false);
  const auto d = state_derivative(ChainState::rest(m.geometry), 0.0, m);
  EXPECT_EQ(d.q_dot.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.q_ddot.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.r_dot.cwiseAbs().maxCoeff(), 0.0);
}

// Pressure at rest loads every joint with the same positive torque. A single
// body accelerates forward; in longer chains inertial coupling makes the
// joint accelerations alternate in sign, but the input power is positive and
// the tip starts moving toward -x.
TEST(StateDerivative, PressureDrivesTheTubeForward) {
  for (int n : {1, 2, 3, 8}) {
    const ChainModel m = model_for(n);
    const ChainState s = ChainState::rest(m.geometry);
    const auto d = state_derivative(s, 2e5, m);
    const Eigen::VectorXd tau = generalized_forces(s, 2e5, m);
    EXPECT_GT(tau.minCoeff(), 0.0);
    EXPECT_GT(tau.dot(d.q_ddot), 0.0);
    // tip acceleration at q = 0, qd = 0: x'' = -dL sum_i phi''_i
    const Eigen::VectorXd phi_dd = detail::absolute_angles(d.q_ddot);
    EXPECT_LT(-m.geometry.segment_length() * phi_dd.sum(), 0.0);
    if (n == 1) {
      EXPECT_GT(d.q_ddot[0], 0.0);
    }
  }
  EXPECT_THROW(state_derivative(ChainState::rest(model_for(2).geometry), -1.0, model_for(2)),
               DomainError);
}

TEST(StateDerivative, RadiusRatesFollowTheVolumeRelation) {
  Gen g(23);
  const ChainModel m = model_for(4);
  for (int i = 0; i < 20; ++i) {
    const ChainState s = random_state(m, g);
    const auto d = state_derivative(s, 1e5, m);
    EXPECT_LT(rel_err(d.r_dot, testing::radius_rate_oracle(s, m)), 1e-7);
    EXPECT_EQ(d.q_dot, s.q_dot);
  }
}

// Velocity increments over short steps carry an O(h) bias; one Richardson
// step removes it and must recover the instantaneous derivative.
TEST(StateDerivative, ConsistentWithShortSimulatedSteps) {
  Gen g(29);
  const ChainModel m = model_for(2);
  SimulationSettings st;
  st.abs_tol = 1e-14;
  st.rel_tol = 1e-12;
  for (int i = 0; i < 5; ++i) {
    ChainState s = random_state(m, g);
    s.q = s.q.cwiseAbs();
    const double p = 1.5e5;
    const auto trace = PressureTrace::constant(p, 0.0, 1.0);
    auto increment = [&](double h) {
      const std::vector<double> times{h};
      const auto tr = simulate_at(m, s, trace, times, st);
      return Eigen::VectorXd((tr.samples[0].state.q_dot - s.q_dot) / h);
    };
    // damping time constants are a few milliseconds, so the steps stay short
    const double h = 1e-6;
    const Eigen::VectorXd extrapolated = 2.0 * increment(h / 2) - increment(h);
    EXPECT_LT(rel_err(extrapolated, state_derivative(s, p, m).q_ddot), 1e-5);
  }
}

TEST(GeneralizedForces, BranchOverride) {
  const ChainModel m = model_for(2);
  ChainState s = ChainState::rest(m.geometry);
  s.q_dot << 0.5, -0.5;
  const std::vector<DampingBranch> flipped{DampingBranch::kNegative, DampingBranch::kPositive};
  const Eigen::VectorXd natural = generalized_forces(s, 1e5, m);
  const Eigen::VectorXd forced = generalized_forces(s, 1e5, m, flipped);
  const double hyd = hydraulic_torque(1e5, s.r_inner[0], m.params.r_hyd);
  EXPECT_DOUBLE_EQ(natural[0], hyd - damper_coefficient(s.r_inner[0], 0.5, m.params).value * 0.5);
  EXPECT_DOUBLE_EQ(forced[0], hyd - damper_coefficient(s.r_inner[0], -0.5, m.params).value * 0.5);
  const std::vector<DampingBranch> wrong_size{DampingBranch::kPositive};
  EXPECT_THROW(generalized_forces(s, 1e5, m, wrong_size), DomainError);
}

TEST(ChainState, SizeMismatchIsRejected) {
  const ChainModel m = model_for(3);
  ChainState s = ChainState::rest(m.geometry);
  s.q.resize(2);
  EXPECT_THROW(kinetic_energy(s, m), DomainError);
  EXPECT_THROW(mass_matrix(s, m), DomainError);
}

// Energy rate from the model: d(T + U)/dt = tau . qd + parametric power.
TEST(ParametricPower, ClosesTheInstantaneousEnergyBalance) {
  Gen g(31);
  const ChainModel m = model_for(3);
  for (int i = 0; i < 20; ++i) {
    ChainState s = random_state(m, g);
    const double p = 1e5;
    const auto d = state_derivative(s, p, m);
    auto energy = [&](double t) {
      ChainState x = s;
      x.q = s.q + t * d.q_dot + 0.5 * t * t * d.q_ddot;
      x.q_dot = s.q_dot + t * d.q_ddot;
      x.r_inner = s.r_inner + t * d.r_dot;
      return kinetic_energy(x, m) + potential_energy(x, m);
    };
    // accelerations reach 1e4 rad/s^2, so extrapolate the central difference
    auto slope = [&](double h) { return (energy(h) - energy(-h)) / (2 * h); };
    const double rate = (4 * slope(5e-7) - slope(1e-6)) / 3;
    const double model_rate = generalized_forces(s, p, m).dot(s.q_dot) + parametric_power(s, m);
    EXPECT_NEAR(rate, model_rate, 1e-6 * (std::abs(model_rate) + 1e-3));
  }
}

}  // namespace
}  // namespace rfea
