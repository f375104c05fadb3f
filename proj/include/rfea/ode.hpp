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

// One-step integrators with error control and dense output.
//
//   Dopri5  explicit Dormand-Prince 5(4), Hairer's 4th-order continuous extension
//   Rodas4  stiffly accurate Rosenbrock 4(3) (Hairer-Wanner coefficients)
//
// A system type provides
//   void rhs(const Eigen::VectorXd& y, double t, Eigen::VectorXd& dydt);
// and, for Rodas4, additionally
//   void jacobian(const Eigen::VectorXd& y, double t, Eigen::MatrixXd& dfdy,
//                 Eigen::VectorXd& dfdt);
//
// step() takes one adaptive step. step_to() takes a step of prescribed end
// time without error control, which replays a recorded step sequence.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "rfea/errors.hpp"

namespace rfea::ode {

struct StepControl {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double min_step = 1e-14;
  int max_rejections = 500;  // consecutive rejections of a single step
};

namespace detail {

/// Weighted RMS norm of the local error estimate.
inline double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y_old,
                         const Eigen::VectorXd& y_new, const StepControl& ctl) {
  const Eigen::ArrayXd scale =
      ctl.abs_tol + ctl.rel_tol * y_old.array().abs().max(y_new.array().abs());
  return std::sqrt((err.array() / scale).square().mean());
}

/// New step size from the error norm of a method with embedded error order q.
inline double next_step(double h, double err, int q, bool after_reject) {
  constexpr double kSafety = 0.9, kMaxGrow = 5.0, kMaxShrink = 0.2;
  double fac = err > 0.0 ? kSafety * std::pow(err, -1.0 / (q + 1)) : kMaxGrow;
  fac = std::clamp(fac, kMaxShrink, kMaxGrow);
  if (after_reject) fac = std::min(fac, 1.0);
  return h * fac;
}

/// Adaptive driver shared by the steppers. `Method` supplies
///   double trial(double h)            error norm, +inf on failure
///   void commit(double h, double t1)  accept the last trial
///   void prepare()                    per-step setup at (t, y)
template <class Method>
class Stepper {
 public:
  /// Steps end exactly at `t` instead of crossing it (e.g. a kink in the
  /// forcing).
  void set_stop_time(double t) { t_stop_ = t; }

  double time() const { return t_; }
  double step_size() const { return h_; }
  double last_step_size() const { return h_last_; }
  const Eigen::VectorXd& state() const { return y_; }

  void step() {
    auto& m = static_cast<Method&>(*this);
    m.prepare();
    bool rejected = false;
    for (int attempt = 0;; ++attempt) {
      if (attempt > ctl_.max_rejections) throw IntegrationError("too many rejected steps");
      if (h_ < ctl_.min_step) throw IntegrationError("step size underflow");
      double t_new = t_ + h_;
      if (t_stop_ > t_ && t_ + 1.01 * h_ >= t_stop_) t_new = t_stop_;
      // the step is taken as the rounded difference of its end points, so
      // step_to() on the recorded end time repeats it bit for bit
      const double h = t_new - t_;
      const double en = m.trial(h);
      if (!std::isfinite(en)) {
        h_ *= 0.2;
        rejected = true;
        continue;
      }
      const double h_next = next_step(h, en, Method::kErrorOrder, rejected);
      if (en <= 1.0) {
        m.commit(h, t_new);
        h_ = h_next;
        return;
      }
      h_ = h_next;
      rejected = true;
    }
  }

  /// One step to `t_next` > time(), accepted whatever its error estimate.
  void step_to(double t_next) {
    auto& m = static_cast<Method&>(*this);
    const double h = t_next - t_;
    if (!(h > 0.0)) throw IntegrationError("step_to: end time must lie ahead");
    m.prepare();
    const double en = m.trial(h);
    if (!std::isfinite(en)) throw IntegrationError("replayed step left the model's domain");
    m.commit(h, t_next);
    h_ = next_step(h, en, Method::kErrorOrder, false);
  }

 protected:
  explicit Stepper(StepControl control) : ctl_(control) {}

  void start(const Eigen::VectorXd& y0, double t0, double h0) {
    y_ = y0;
    t_ = t0;
    h_ = h0;
  }

  void advance(const Eigen::VectorXd& y_new, double h, double t_new) {
    y_old_ = y_;
    t_old_ = t_;
    y_ = y_new;
    t_ = t_new;
    h_last_ = h;
  }

  StepControl ctl_;
  Eigen::VectorXd y_, y_old_;
  double t_ = 0.0, t_old_ = 0.0, h_ = 0.0, h_last_ = 0.0;
  double t_stop_ = std::numeric_limits<double>::infinity();
};

}  // namespace detail

template <class System>
class Dopri5 : public detail::Stepper<Dopri5<System>> {
  using Base = detail::Stepper<Dopri5<System>>;
  friend Base;

 public:
  static constexpr int kErrorOrder = 4;

  explicit Dopri5(System& system, StepControl control = {}) : Base(control), sys_(system) {}

  void initialize(const Eigen::VectorXd& y0, double t0, double h0) {
    this->start(y0, t0, h0);
    const long n = y0.size();
    k1_.resize(n);
    for (auto* v : {&k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &y_new_, &tmp_}) v->resize(n);
    sys_.rhs(y0, t0, k1_);
  }

  /// The right-hand side changed between steps; drops the cached slope.
  void rhs_changed() { sys_.rhs(this->y_, this->t_, k1_); }

  /// Dense output within the last accepted step.
  void interpolate(double t, Eigen::VectorXd& y) const {
    const double s = (t - this->t_old_) / this->h_last_, s1 = 1.0 - s;
    y = cont_[0] + s * (cont_[1] + s1 * (cont_[2] + s * (cont_[3] + s1 * cont_[4])));
  }

 private:
  void prepare() {}

  double trial(double h) {
    const auto& y = this->y_;
    const double t = this->t_;
    try {
      tmp_ = y + h * (a21 * k1_);
      sys_.rhs(tmp_, t + c2 * h, k2_);
      tmp_ = y + h * (a31 * k1_ + a32 * k2_);
      sys_.rhs(tmp_, t + c3 * h, k3_);
      tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      sys_.rhs(tmp_, t + c4 * h, k4_);
      tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      sys_.rhs(tmp_, t + c5 * h, k5_);
      tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      sys_.rhs(tmp_, t + h, k6_);
      y_new_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
      sys_.rhs(y_new_, t + h, k7_);
      tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      return detail::error_norm(tmp_, y, y_new_, this->ctl_);
    } catch (const Error&) {
      // a trial stage left the model's domain
      return std::numeric_limits<double>::infinity();
    }
  }

  void commit(double h, double t_new) {
    // continuous extension on [t, t + h]
    cont_[0] = this->y_;
    cont_[1] = y_new_ - this->y_;
    cont_[2] = h * k1_ - cont_[1];
    cont_[3] = cont_[1] - h * k7_ - cont_[2];
    cont_[4] = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    this->advance(y_new_, h, t_new);
    k1_.swap(k7_);
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  System& sys_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, y_new_, tmp_;
  Eigen::VectorXd cont_[5];
};

template <class System>
class Rodas4 : public detail::Stepper<Rodas4<System>> {
  using Base = detail::Stepper<Rodas4<System>>;
  friend Base;

 public:
  static constexpr int kErrorOrder = 3;

  explicit Rodas4(System& system, StepControl control = {}) : Base(control), sys_(system) {}

  void initialize(const Eigen::VectorXd& y0, double t0, double h0) {
    this->start(y0, t0, h0);
    const long n = y0.size();
    for (auto* v : {&f0_, &fs_, &ytmp_, &y_new_, &err_, &dfdt_, &g1_, &g2_, &g3_, &g4_, &g5_}) {
      v->resize(n);
    }
    jac_.resize(n, n);
  }

  /// The Jacobian is rebuilt every step, so nothing is cached.
  void rhs_changed() {}

  void interpolate(double t, Eigen::VectorXd& y) const {
    const double s = (t - this->t_old_) / this->h_last_, s1 = 1.0 - s;
    y = this->y_old_ * s1 + s * (this->y_ + s1 * (cont3_ + s * cont4_));
  }

 private:
  void prepare() {
    sys_.rhs(this->y_, this->t_, f0_);
    sys_.jacobian(this->y_, this->t_, jac_, dfdt_);
  }

  double trial(double h) {
    const auto& y = this->y_;
    const double t = this->t_;
    try {
      Eigen::MatrixXd w = -jac_;
      w.diagonal().array() += 1.0 / (gamma * h);
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(w);
      g1_ = lu.solve(f0_ + h * d1 * dfdt_);
      ytmp_ = y + a21 * g1_;
      sys_.rhs(ytmp_, t + c2 * h, fs_);
      g2_ = lu.solve(fs_ + h * d2 * dfdt_ + c21 * g1_ / h);
      ytmp_ = y + a31 * g1_ + a32 * g2_;
      sys_.rhs(ytmp_, t + c3 * h, fs_);
      g3_ = lu.solve(fs_ + h * d3 * dfdt_ + (c31 * g1_ + c32 * g2_) / h);
      ytmp_ = y + a41 * g1_ + a42 * g2_ + a43 * g3_;
      sys_.rhs(ytmp_, t + c4 * h, fs_);
      g4_ = lu.solve(fs_ + h * d4 * dfdt_ + (c41 * g1_ + c42 * g2_ + c43 * g3_) / h);
      ytmp_ = y + a51 * g1_ + a52 * g2_ + a53 * g3_ + a54 * g4_;
      sys_.rhs(ytmp_, t + h, fs_);
      g5_ = lu.solve(fs_ + (c51 * g1_ + c52 * g2_ + c53 * g3_ + c54 * g4_) / h);
      ytmp_ += g5_;
      sys_.rhs(ytmp_, t + h, fs_);
      err_ = lu.solve(fs_ + (c61 * g1_ + c62 * g2_ + c63 * g3_ + c64 * g4_ + c65 * g5_) / h);
      y_new_ = ytmp_ + err_;
      if (!y_new_.allFinite()) return std::numeric_limits<double>::infinity();
      return detail::error_norm(err_, y, y_new_, this->ctl_);
    } catch (const Error&) {
      // a trial stage left the model's domain
      return std::numeric_limits<double>::infinity();
    }
  }

  void commit(double h, double t_new) {
    cont3_ = dd21 * g1_ + dd22 * g2_ + dd23 * g3_ + dd24 * g4_ + dd25 * g5_;
    cont4_ = dd31 * g1_ + dd32 * g2_ + dd33 * g3_ + dd34 * g4_ + dd35 * g5_;
    this->advance(y_new_, h, t_new);
  }

  static constexpr double gamma = 0.25;
  static constexpr double d1 = 0.25, d2 = -0.1043, d3 = 0.1035, d4 = -0.3620000000000023e-01;
  static constexpr double c2 = 0.386, c3 = 0.21, c4 = 0.63;
  static constexpr double c21 = -0.5668800000000000e+01;
  static constexpr double a21 = 0.1544000000000000e+01;
  static constexpr double c31 = -0.2430093356833875e+01, c32 = -0.2063599157091915e+00;
  static constexpr double a31 = 0.9466785280815826e+00, a32 = 0.2557011698983284e+00;
  static constexpr double c41 = -0.1073529058151375e+00, c42 = -0.9594562251023355e+01,
                          c43 = -0.2047028614809616e+02;
  static constexpr double a41 = 0.3314825187068521e+01, a42 = 0.2896124015972201e+01,
                          a43 = 0.9986419139977817e+00;
  static constexpr double c51 = 0.7496443313967647e+01, c52 = -0.1024680431464352e+02,
                          c53 = -0.3399990352819905e+02, c54 = 0.1170890893206160e+02;
  static constexpr double a51 = 0.1221224509226641e+01, a52 = 0.6019134481288629e+01,
                          a53 = 0.1253708332932087e+02, a54 = -0.6878860361058950e+00;
  static constexpr double c61 = 0.8083246795921522e+01, c62 = -0.7981132988064893e+01,
                          c63 = -0.3152159432874371e+02, c64 = 0.1631930543123136e+02,
                          c65 = -0.6058818238834054e+01;
  static constexpr double dd21 = 0.1012623508344586e+02, dd22 = -0.7487995877610167e+01,
                          dd23 = -0.3480091861555747e+02, dd24 = -0.7992771707568823e+01,
                          dd25 = 0.1025137723295662e+01;
  static constexpr double dd31 = -0.6762803392801253e+00, dd32 = 0.6087714651680015e+01,
                          dd33 = 0.1643084320892478e+02, dd34 = 0.2476722511418386e+02,
                          dd35 = -0.6594389125716872e+01;

  System& sys_;
  Eigen::MatrixXd jac_;
  Eigen::VectorXd f0_, fs_, ytmp_, y_new_, err_, dfdt_, g1_, g2_, g3_, g4_, g5_;
  Eigen::VectorXd cont3_, cont4_;
};

}  // namespace rfea::ode
