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

// rfea: simulate, steady, fit, validate.
//
// Exit codes: 0 success, 1 internal error, 2 usage or configuration,
// 3 input data, 4 numerical failure, 5 validation threshold exceeded.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "rfea.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitThreshold = 5;

struct Options {
  std::string config = "dof8";
  std::string pressure, out, measured, params, guess, tip_out;
  double t_end = 0.0;
  double pressure_pa = 0.0;
  double noise_std = 0.0;
  unsigned long long seed = 1;
  bool degrees = false;
  std::string objective = "tip_y";
  int max_iterations = 60;
  unsigned threads = 1;
  double rms_max = 0.005;
  bool quiet = false;
};

rfea::Objective parse_objective(const std::string& s) {
  if (s == "tip_y") return rfea::Objective::kTipY;
  if (s == "tip_xy") return rfea::Objective::kTipXY;
  throw rfea::ConfigError("--objective must be tip_y or tip_xy");
}

int run_simulate(const Options& o) {
  const rfea::RunConfig cfg = rfea::load_config(o.config);
  const rfea::PressureTrace trace = rfea::load_pressure_trace(o.pressure);
  const double t0 = trace.start_time();
  const double t_end = o.t_end > 0.0 ? o.t_end : trace.end_time();
  if (!trace.covers(t0, t_end)) {
    throw rfea::DataError("pressure trace ends at " + std::to_string(trace.end_time()) +
                          " s, before --t-end");
  }
  const rfea::Trajectory traj = rfea::simulate(
      cfg.model(), rfea::ChainState::rest(cfg.geometry, t0), trace, t_end, cfg.simulation);
  rfea::export_trajectory(traj, o.out, o.degrees);
  if (!o.tip_out.empty()) {
    auto m = rfea::MeasuredTrajectory::from_trajectory(traj, o.tip_out);
    if (o.noise_std > 0.0) {
      std::mt19937_64 rng(o.seed);
      std::normal_distribution<double> noise(0.0, o.noise_std);
      for (auto& s : m.samples) {
        s.tip_x += noise(rng);
        s.tip_y += noise(rng);
      }
    }
    rfea::export_measured(m, o.tip_out);
  }
  if (!o.quiet) {
    const auto& last = traj.samples.back();
    std::printf("samples=%zu steps=%ld\nt_end=%.6f\nbend_total=%.9g %s\ntip_x_m=%.9g\ntip_y_m=%.9g\n",
                traj.size(), traj.steps_taken, last.state.time,
                last.bend_total * (o.degrees ? rfea::kDegPerRad : 1.0), o.degrees ? "deg" : "rad",
                last.tip.x, last.tip.y);
  }
  return 0;
}

int run_steady(const Options& o) {
  const rfea::RunConfig cfg = rfea::load_config(o.config);
  if (!(o.pressure_pa >= 0.0)) throw rfea::ConfigError("--pressure-pa must be non-negative");
  const rfea::SteadySolution sol = rfea::solve_bending(o.pressure_pa, cfg.geometry, cfg.params);
  rfea::write_steady(sol, std::cout, o.degrees);
  return 0;
}

int run_fit(const Options& o) {
  const rfea::RunConfig cfg = rfea::load_config(o.config);
  rfea::FitProblem problem;
  problem.trace = rfea::load_pressure_trace(o.pressure);
  problem.measured = rfea::load_measured(o.measured);
  problem.geometry = cfg.geometry;
  problem.gravity_enabled = cfg.gravity_enabled;
  problem.objective = parse_objective(o.objective);
  problem.initial_guess = o.guess.empty() ? cfg.params : rfea::load_params(o.guess, cfg.params);
  problem.initial_guess.set_identifiable(
      problem.bounds.clip(problem.initial_guess.identifiable()));

  rfea::FitSettings settings;
  settings.max_iterations = o.max_iterations;
  settings.threads = std::max(1u, o.threads);
  const rfea::FitResult result = rfea::fit(problem, settings);
  rfea::export_params(result.params, o.out, o.degrees, &result);
  if (!o.quiet) {
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      std::printf("iteration %zu rms_m=%.6e\n", i, result.history[i]);
    }
    std::printf("method=%s\nconverged=%s\nstop=%s\niterations=%d\nevaluations=%ld\nrms_m=%.6e\n",
                result.method.c_str(), result.converged ? "yes" : "no", result.stop_reason.c_str(),
                result.iterations, result.evaluations, result.residual_rms);
  }
  return 0;
}

int run_validate(const Options& o) {
  const rfea::RunConfig cfg = rfea::load_config(o.config);
  const rfea::MaterialParams params =
      o.params.empty() ? cfg.params : rfea::load_params(o.params, cfg.params);
  const rfea::PressureTrace trace = rfea::load_pressure_trace(o.pressure);
  const rfea::MeasuredTrajectory meas = rfea::load_measured(o.measured);
  if (!(o.rms_max > 0.0)) throw rfea::ConfigError("--rms-max must be positive");
  const double t0 = trace.start_time();
  if (meas.samples.front().t < t0 || !trace.covers(t0, meas.samples.back().t)) {
    throw rfea::DataError("pressure trace does not cover the measured interval");
  }
  const rfea::ChainModel model{cfg.geometry, params, cfg.gravity_enabled};
  const std::vector<double> times = meas.times();
  const rfea::Trajectory traj = rfea::simulate_at(
      model, rfea::ChainState::rest(cfg.geometry, t0), trace, times, cfg.simulation);
  double sum = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double e = std::hypot(traj.samples[i].tip.x - meas.samples[i].tip_x,
                                traj.samples[i].tip.y - meas.samples[i].tip_y);
    sum += e * e;
    worst = std::max(worst, e);
  }
  const double rms = std::sqrt(sum / static_cast<double>(times.size()));
  std::printf("samples=%zu\nrms_m=%.6e\nmax_m=%.6e\nrms_max_m=%.6e\n", times.size(), rms, worst,
              o.rms_max);
  if (rms > o.rms_max) {
    std::printf("result=FAIL\n");
    return kExitThreshold;
  }
  std::printf("result=PASS\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic model of a fibre-reinforced elastomeric bending actuator"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config,-c", o.config, "Config file, or preset dof2 / dof8")
        ->capture_default_str();
  };

  CLI::App* sim = app.add_subcommand("simulate", "Integrate the model under a pressure trace");
  add_config(sim);
  sim->add_option("--pressure,-p", o.pressure, "Pressure CSV (t_s,p_pa)")->required();
  sim->add_option("--out,-o", o.out, "Trajectory CSV to write")->required();
  sim->add_option("--t-end,--tend", o.t_end, "End time [s]; defaults to the end of the trace");
  sim->add_option("--tip-out", o.tip_out, "Also write tip positions (t_s,tip_x_m,tip_y_m)");
  sim->add_option("--noise-std", o.noise_std, "Gaussian noise added to --tip-out [m]");
  sim->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  sim->add_flag("--degrees", o.degrees, "Write angles in degrees");
  sim->add_flag("--quiet,-q", o.quiet, "No summary on stdout");

  CLI::App* steady = app.add_subcommand("steady", "Closed-form steady bending at one pressure");
  add_config(steady);
  steady->add_option("--pressure-pa", o.pressure_pa, "Gauge pressure [Pa]")->required();
  steady->add_flag("--degrees", o.degrees, "Report angles in degrees");

  CLI::App* fit = app.add_subcommand("fit", "Identify material parameters from tip data");
  add_config(fit);
  fit->add_option("--pressure,-p", o.pressure, "Pressure CSV (t_s,p_pa)")->required();
  fit->add_option("--measured,-m", o.measured, "Measured tip CSV")->required();
  fit->add_option("--out,-o", o.out, "Parameter CSV to write")->required();
  fit->add_option("--guess", o.guess, "Initial parameters; defaults to the config");
  fit->add_option("--objective", o.objective, "tip_y or tip_xy")
      ->check(CLI::IsMember({"tip_y", "tip_xy"}))
      ->capture_default_str();
  fit->add_option("--max-iterations", o.max_iterations)->capture_default_str();
  fit->add_option("--threads", o.threads, "Parallel Jacobian columns")->capture_default_str();
  fit->add_flag("--degrees", o.degrees, "Write angular coefficients per degree");
  fit->add_flag("--quiet,-q", o.quiet, "No progress on stdout");

  CLI::App* val = app.add_subcommand("validate", "Compare a simulation against tip data");
  add_config(val);
  val->add_option("--params", o.params, "Parameter CSV; defaults to the config");
  val->add_option("--pressure,-p", o.pressure, "Pressure CSV (t_s,p_pa)")->required();
  val->add_option("--measured,-m", o.measured, "Measured tip CSV")->required();
  val->add_option("--rms-max", o.rms_max, "Largest acceptable RMS tip error [m]")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) return run_simulate(o);
    if (steady->parsed()) return run_steady(o);
    if (fit->parsed()) return run_fit(o);
    return run_validate(o);
  } catch (const rfea::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const rfea::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const rfea::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const rfea::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
