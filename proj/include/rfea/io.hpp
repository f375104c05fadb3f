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

// Run configuration files and CSV data exchange.
//
// Config files are INI-like:
//
//   preset = dof8            # optional base values, before any section
//   [geometry]   outer_radius initial_inner_radius total_length segment_count
//   [params]     k_0 m_k b_0_pos m_b_pos b_0_neg m_b_neg r_hyd total_mass gravity
//                angle_unit = rad | deg
//   [simulation] gravity = on | off, abs_tol, rel_tol, output_rate_hz,
//                integrator = rosenbrock4 | dopri5, initial_step, max_steps
//
// '#' and ';' start comments. Unknown sections and keys are rejected.

#pragma once

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"
#include "rfea/identification.hpp"
#include "rfea/presets.hpp"
#include "rfea/simulate.hpp"
#include "rfea/steady_state.hpp"

namespace rfea {

struct RunConfig {
  ActuatorGeometry geometry;
  MaterialParams params;
  bool gravity_enabled = true;
  SimulationSettings simulation;

  ChainModel model() const { return {geometry, params, gravity_enabled}; }
};

namespace io_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path, bool config) {
  std::ifstream in(path);
  if (!in) {
    const std::string msg = "cannot open '" + path + "'";
    if (config) throw ConfigError(msg);
    throw DataError(msg);
  }
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

/// Twelve significant digits.
inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

}  // namespace io_detail

/// Parses a configuration; `origin` names the source in error messages.
inline RunConfig parse_config(std::istream& in, const std::string& origin = "config") {
  using io_detail::trim;
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::string section, raw;
  int line_no = 0;
  auto fail = [&](int line, const std::string& what) -> ConfigError {
    return ConfigError(origin + ":" + std::to_string(line) + ": " + what);
  };
  static const std::map<std::string, std::vector<std::string>> kKeys = {
      {"", {"preset"}},
      {"geometry", {"outer_radius", "initial_inner_radius", "total_length", "segment_count"}},
      {"params",
       {"k_0", "m_k", "b_0_pos", "m_b_pos", "b_0_neg", "m_b_neg", "r_hyd", "total_mass", "gravity",
        "angle_unit"}},
      {"simulation",
       {"gravity", "abs_tol", "rel_tol", "output_rate_hz", "integrator", "initial_step",
        "max_steps"}},
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find_first_of("#;"));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail(line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!kKeys.count(section) || section.empty()) {
        throw fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& allowed = kKeys.at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw fail(line_no, "unknown key '" + key + "'" +
                              (section.empty() ? std::string() : " in [" + section + "]"));
    }
    if (value.empty()) throw fail(line_no, "empty value for '" + key + "'");
    if (sections[section].count(key)) throw fail(line_no, "duplicate key '" + key + "'");
    sections[section][key] = {value, line_no};
  }

  auto get = [&](const std::string& sec, const std::string& key) -> const Entry* {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };
  auto number = [&](const std::string& sec, const std::string& key) -> std::optional<double> {
    const Entry* e = get(sec, key);
    if (!e) return std::nullopt;
    auto v = io_detail::parse_double(e->value);
    if (!v) throw fail(e->line, "'" + key + "' is not a finite number: " + e->value);
    return v;
  };

  Preset base = preset("dof8");
  if (const Entry* e = get("", "preset")) {
    auto p = find_preset(e->value);
    if (!p) throw fail(e->line, "unknown preset '" + e->value + "'");
    base = *p;
  }

  RunConfig cfg;
  // geometry
  const double r_o = number("geometry", "outer_radius").value_or(base.geometry.outer_radius());
  const double r_i0 =
      number("geometry", "initial_inner_radius").value_or(base.geometry.initial_inner_radius());
  const double length = number("geometry", "total_length").value_or(base.geometry.total_length());
  int n = base.geometry.segment_count();
  if (auto v = number("geometry", "segment_count")) {
    if (*v < 1 || *v != std::floor(*v) || *v > 100000) {
      throw fail(get("geometry", "segment_count")->line, "'segment_count' must be a positive integer");
    }
    n = static_cast<int>(*v);
  }
  try {
    cfg.geometry = ActuatorGeometry(r_o, r_i0, length, n);
  } catch (const DomainError& e) {
    throw ConfigError(origin + ": [geometry] " + e.what());
  }

  // params: the preset's joint coefficients follow a changed segment count
  cfg.params = base.params.rescaled_segments(base.geometry.segment_count(), n);
  if (!get("geometry", "outer_radius") && !get("geometry", "initial_inner_radius") &&
      !get("geometry", "total_length")) {
    // keep the preset's tube mass
  } else {
    cfg.params.total_mass = tube_mass(cfg.geometry);
  }
  double angle_factor = 1.0;
  if (const Entry* e = get("params", "angle_unit")) {
    if (e->value == "deg") {
      angle_factor = kDegPerRad;
    } else if (e->value != "rad") {
      throw fail(e->line, "'angle_unit' must be rad or deg");
    }
  }
  struct Slot {
    const char* key;
    double* target;
    bool angular;
  };
  MaterialParams& p = cfg.params;
  const Slot slots[] = {{"k_0", &p.k_0, true},         {"m_k", &p.m_k, true},
                        {"b_0_pos", &p.b_0_pos, true}, {"m_b_pos", &p.m_b_pos, true},
                        {"b_0_neg", &p.b_0_neg, true}, {"m_b_neg", &p.m_b_neg, true},
                        {"r_hyd", &p.r_hyd, false},    {"total_mass", &p.total_mass, false},
                        {"gravity", &p.gravity, false}};
  for (const Slot& s : slots) {
    if (auto v = number("params", s.key)) *s.target = *v * (s.angular ? angle_factor : 1.0);
  }
  try {
    cfg.params.validate();
  } catch (const DomainError& e) {
    throw ConfigError(origin + ": [params] " + e.what());
  }

  // simulation
  if (const Entry* e = get("simulation", "gravity")) {
    if (e->value == "on" || e->value == "true" || e->value == "1") {
      cfg.gravity_enabled = true;
    } else if (e->value == "off" || e->value == "false" || e->value == "0") {
      cfg.gravity_enabled = false;
    } else {
      throw fail(e->line, "'gravity' must be on or off");
    }
  }
  SimulationSettings& sim = cfg.simulation;
  auto positive = [&](const char* key, double& target) {
    if (auto v = number("simulation", key)) {
      if (!(*v > 0.0)) throw fail(get("simulation", key)->line, std::string("'") + key + "' must be positive");
      target = *v;
    }
  };
  positive("abs_tol", sim.abs_tol);
  positive("rel_tol", sim.rel_tol);
  positive("output_rate_hz", sim.output_rate_hz);
  positive("initial_step", sim.initial_step);
  double max_steps = static_cast<double>(sim.max_steps);
  positive("max_steps", max_steps);
  sim.max_steps = static_cast<long>(max_steps);
  if (const Entry* e = get("simulation", "integrator")) {
    if (e->value == "rosenbrock4") {
      sim.integrator = IntegratorKind::kRosenbrock4;
    } else if (e->value == "dopri5") {
      sim.integrator = IntegratorKind::kDopri5;
    } else {
      throw fail(e->line, "'integrator' must be rosenbrock4 or dopri5");
    }
  }
  return cfg;
}

/// A config file, or one of the built-in preset names.
inline RunConfig load_config(const std::string& path_or_preset) {
  if (auto p = find_preset(path_or_preset)) {
    std::istringstream in("preset = " + path_or_preset + "\n");
    return parse_config(in, path_or_preset);
  }
  std::ifstream in = io_detail::open_input(path_or_preset, true);
  return parse_config(in, path_or_preset);
}

/// Reads a header line and numeric rows with exactly `expected` columns.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& origin,
                                                         const std::vector<std::string>& header) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!io_detail::trim(line).empty()) break;
  }
  if (line_no == 0 || io_detail::trim(line).empty()) throw DataError(origin + ": empty file");
  if (io_detail::split_csv(line) != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw DataError(origin + ":" + std::to_string(line_no) + ": expected header '" + want + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto cells = io_detail::split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = io_detail::parse_double(cells[c]);
      if (!v) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": column '" + header[c] +
                        "' is not a finite number: '" + cells[c] + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Pressure CSV with header t_s,p_pa.
inline PressureTrace parse_pressure_trace(std::istream& in, const std::string& origin = "pressure") {
  const auto rows = read_numeric_csv(in, origin, {"t_s", "p_pa"});
  if (rows.empty()) throw DataError(origin + ": no pressure samples");
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i][0] > rows[i - 1][0])) {
      throw DataError(origin + ": data row " + std::to_string(i + 1) +
                      ": time not strictly increasing (" + io_detail::format_value(rows[i][0]) +
                      " after " + io_detail::format_value(rows[i - 1][0]) + ")");
    }
    if (rows[i][1] < 0.0) {
      throw DataError(origin + ": data row " + std::to_string(i + 1) + ": negative pressure");
    }
    samples.emplace_back(rows[i][0], rows[i][1]);
  }
  return PressureTrace(std::move(samples));
}

inline PressureTrace load_pressure_trace(const std::string& path) {
  std::ifstream in = io_detail::open_input(path, false);
  return parse_pressure_trace(in, path);
}

inline void write_pressure_trace(const PressureTrace& trace, std::ostream& out) {
  out << "t_s,p_pa\n";
  for (const auto& [t, p] : trace.samples()) {
    out << io_detail::format_value(t) << ',' << io_detail::format_value(p) << '\n';
  }
}

inline void export_pressure_trace(const PressureTrace& trace, const std::string& path) {
  std::ofstream out = io_detail::open_output(path);
  write_pressure_trace(trace, out);
}

/// Column names of a trajectory file for n segments.
inline std::vector<std::string> trajectory_header(int n, bool degrees = false) {
  std::vector<std::string> h{"t_s"};
  const std::string a = degrees ? "_deg" : "";
  for (int j = 1; j <= n; ++j) h.push_back("theta_" + std::to_string(j) + a);
  for (int j = 1; j <= n; ++j) h.push_back("omega_" + std::to_string(j) + a);
  for (int j = 1; j <= n; ++j) h.push_back("ri_" + std::to_string(j));
  for (const char* c : {"tip_x_m", "tip_y_m"}) h.emplace_back(c);
  h.push_back(degrees ? "bend_total_deg" : "bend_total_rad");
  for (const char* c : {"energy_kin_j", "energy_pot_j", "p_pa"}) h.emplace_back(c);
  return h;
}

/// Angles and rates in radians, or degrees with `degrees`.
inline void write_trajectory(const Trajectory& traj, std::ostream& out, bool degrees = false) {
  if (traj.empty()) throw DataError("export_trajectory: empty trajectory");
  const int n = traj.segment_count;
  const double f = degrees ? kDegPerRad : 1.0;
  const auto header = trajectory_header(n, degrees);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& s : traj.samples) {
    std::string row = io_detail::format_value(s.state.time);
    auto add = [&](double v) { row += ',' + io_detail::format_value(v); };
    for (int j = 0; j < n; ++j) add(s.state.q[j] * f);
    for (int j = 0; j < n; ++j) add(s.state.q_dot[j] * f);
    for (int j = 0; j < n; ++j) add(s.state.r_inner[j]);
    add(s.tip.x);
    add(s.tip.y);
    add(s.bend_total * f);
    add(s.kinetic);
    add(s.potential.total());
    add(s.pressure);
    out << row << '\n';
  }
}

inline void export_trajectory(const Trajectory& traj, const std::string& path,
                              bool degrees = false) {
  if (traj.empty()) throw DataError("export_trajectory: empty trajectory");
  std::ofstream out = io_detail::open_output(path);
  write_trajectory(traj, out, degrees);
  if (!out) throw DataError("export_trajectory: write to '" + path + "' failed");
}

/// One row of a trajectory file, angles in radians.
struct TrajectoryRecord {
  double t = 0.0;
  std::vector<double> theta, omega, r_inner;
  double tip_x = 0.0, tip_y = 0.0, bend_total = 0.0, energy_kin = 0.0, energy_pot = 0.0;
  double pressure = 0.0;
};

/// Reads a trajectory file in either angle unit; the segment count follows
/// from the column count.
inline std::vector<TrajectoryRecord> parse_trajectory(std::istream& in,
                                                      const std::string& origin = "trajectory") {
  std::string first;
  std::getline(in, first);
  const auto cols = io_detail::split_csv(first);
  if (cols.size() < 10 || (cols.size() - 7) % 3 != 0) {
    throw DataError(origin + ": not a trajectory header");
  }
  const int n = static_cast<int>((cols.size() - 7) / 3);
  bool degrees = false;
  if (cols == trajectory_header(n, true)) {
    degrees = true;
  } else if (cols != trajectory_header(n, false)) {
    throw DataError(origin + ": unexpected trajectory header");
  }
  std::istringstream rest(first + "\n" + std::string(std::istreambuf_iterator<char>(in), {}));
  const auto rows = read_numeric_csv(rest, origin, cols);
  const double f = degrees ? kRadPerDeg : 1.0;
  std::vector<TrajectoryRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    TrajectoryRecord rec;
    rec.t = r[0];
    for (int j = 0; j < n; ++j) {
      rec.theta.push_back(r[1 + j] * f);
      rec.omega.push_back(r[1 + n + j] * f);
      rec.r_inner.push_back(r[1 + 2 * n + j]);
    }
    rec.tip_x = r[1 + 3 * n];
    rec.tip_y = r[2 + 3 * n];
    rec.bend_total = r[3 + 3 * n] * f;
    rec.energy_kin = r[4 + 3 * n];
    rec.energy_pot = r[5 + 3 * n];
    rec.pressure = r[6 + 3 * n];
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<TrajectoryRecord> load_trajectory(const std::string& path) {
  std::ifstream in = io_detail::open_input(path, false);
  return parse_trajectory(in, path);
}

/// Measured tip positions, header t_s,tip_x_m,tip_y_m.
inline MeasuredTrajectory parse_measured(std::istream& in, const std::string& origin = "measured") {
  const auto rows = read_numeric_csv(in, origin, {"t_s", "tip_x_m", "tip_y_m"});
  MeasuredTrajectory m;
  m.source = origin;
  for (const auto& r : rows) m.samples.push_back({r[0], r[1], r[2]});
  m.validate();
  return m;
}

inline MeasuredTrajectory load_measured(const std::string& path) {
  std::ifstream in = io_detail::open_input(path, false);
  return parse_measured(in, path);
}

inline void write_measured(const MeasuredTrajectory& m, std::ostream& out) {
  out << "t_s,tip_x_m,tip_y_m\n";
  for (const auto& s : m.samples) {
    out << io_detail::format_value(s.t) << ',' << io_detail::format_value(s.tip_x) << ','
        << io_detail::format_value(s.tip_y) << '\n';
  }
}

inline void export_measured(const MeasuredTrajectory& m, const std::string& path) {
  std::ofstream out = io_detail::open_output(path);
  write_measured(m, out);
}

/// Parameter file: key,value,unit rows. Angular coefficients carry "rad" or
/// "deg" in their unit; fit statistics appear as extra keys.
inline void write_params(const MaterialParams& p, std::ostream& out, bool degrees = false,
                         const FitResult* fit = nullptr) {
  const double f = degrees ? kRadPerDeg : 1.0;
  const std::string a = degrees ? "deg" : "rad";
  out << "key,value,unit\n";
  auto row = [&](const std::string& k, double v, const std::string& unit) {
    out << k << ',' << io_detail::format_value(v) << ',' << unit << '\n';
  };
  row("k_0", p.k_0 * f, "N m/" + a);
  row("m_k", p.m_k * f, "N/" + a);
  row("b_0_pos", p.b_0_pos * f, "N m s/" + a);
  row("m_b_pos", p.m_b_pos * f, "N s/" + a);
  row("b_0_neg", p.b_0_neg * f, "N m s/" + a);
  row("m_b_neg", p.m_b_neg * f, "N s/" + a);
  row("r_hyd", p.r_hyd, "m");
  row("total_mass", p.total_mass, "kg");
  row("gravity", p.gravity, "m/s^2");
  if (fit) {
    row("residual_rms", fit->residual_rms, "m");
    row("iterations", fit->iterations, "1");
    row("evaluations", static_cast<double>(fit->evaluations), "1");
    row("converged", fit->converged ? 1.0 : 0.0, "1");
  }
}

inline void export_params(const MaterialParams& p, const std::string& path, bool degrees = false,
                          const FitResult* fit = nullptr) {
  std::ofstream out = io_detail::open_output(path);
  write_params(p, out, degrees, fit);
}

/// Reads a parameter file over `base`; keys not present keep base values.
inline MaterialParams parse_params(std::istream& in, const MaterialParams& base,
                                   const std::string& origin = "params") {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || io_detail::split_csv(line) !=
                                     std::vector<std::string>{"key", "value", "unit"}) {
    throw DataError(origin + ": expected header 'key,value,unit'");
  }
  ++line_no;
  MaterialParams p = base;
  std::map<std::string, double*> angular = {{"k_0", &p.k_0},         {"m_k", &p.m_k},
                                            {"b_0_pos", &p.b_0_pos}, {"m_b_pos", &p.m_b_pos},
                                            {"b_0_neg", &p.b_0_neg}, {"m_b_neg", &p.m_b_neg}};
  std::map<std::string, double*> plain = {
      {"r_hyd", &p.r_hyd}, {"total_mass", &p.total_mass}, {"gravity", &p.gravity}};
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    const auto cells = io_detail::split_csv(line);
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != 3) throw DataError(where + "expected key,value,unit");
    auto v = io_detail::parse_double(cells[1]);
    if (!v) throw DataError(where + "value of '" + cells[0] + "' is not a finite number");
    if (auto it = angular.find(cells[0]); it != angular.end()) {
      const std::string& unit = cells[2];
      const bool deg = unit.size() >= 4 && unit.compare(unit.size() - 4, 4, "/deg") == 0;
      const bool rad = unit.size() >= 4 && unit.compare(unit.size() - 4, 4, "/rad") == 0;
      if (!deg && !rad) throw DataError(where + "unit of '" + cells[0] + "' must end in /rad or /deg");
      *it->second = *v * (deg ? kDegPerRad : 1.0);
    } else if (auto jt = plain.find(cells[0]); jt != plain.end()) {
      *jt->second = *v;
    } else if (cells[0] != "residual_rms" && cells[0] != "iterations" &&
               cells[0] != "evaluations" && cells[0] != "converged") {
      throw DataError(where + "unknown key '" + cells[0] + "'");
    }
  }
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw DataError(origin + ": " + e.what());
  }
  return p;
}

inline MaterialParams load_params(const std::string& path, const MaterialParams& base) {
  std::ifstream in = io_detail::open_input(path, false);
  return parse_params(in, base, path);
}

/// key=value lines of a steady solution.
inline void write_steady(const SteadySolution& s, std::ostream& out, bool degrees = false) {
  const double f = degrees ? kDegPerRad : 1.0;
  out << (degrees ? "theta_ss_deg=" : "theta_ss=") << io_detail::format_value(s.theta_ss * f)
      << '\n'
      << "r_i_ss=" << io_detail::format_value(s.r_i_ss) << '\n'
      << "elongation_s=" << io_detail::format_value(s.elongation_s) << '\n'
      << (degrees ? "k_ss_per_deg=" : "k_ss=") << io_detail::format_value(s.k_ss / f) << '\n'
      << "iterations=" << s.iterations << '\n';
}

}  // namespace rfea
