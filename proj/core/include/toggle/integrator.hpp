#pragma once

// Adaptive Dormand-Prince 5(4) integration of autonomous systems with
// piecewise-constant inputs. Steps never straddle an input switch: each
// segment of the input schedule is integrated separately and the FSAL stage
// is discarded at every boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include "toggle/errors.hpp"
#include "toggle/trajectory.hpp"

namespace toggle {

struct IntegratorOptions {
  double tol = 1e-8;         // relative (and absolute) local error tolerance
  double output_dt = 1.0;    // output grid spacing in minutes, anchored at t = 0
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

template <std::size_t N>
class DormandPrince {
 public:
  using Vec = std::array<double, N>;

  explicit DormandPrince(double tol, double h_max = std::numeric_limits<double>::infinity())
      : tol_(tol), h_max_(h_max) {}

  /// Integrates y from t to t_end with f(y) -> dy/dt. On return t == t_end.
  template <class F>
  void advance(F&& f, double& t, Vec& y, double t_end) {
    if (!(t_end > t)) return;
    fsal_valid_ = false;
    if (!(h_ > 0.0)) h_ = initial_step(f, y, t_end - t);
    const double h_min = 1e-13 * std::max(1.0, std::abs(t_end));

    while (t < t_end) {
      if (++steps_ > max_steps_) fail("step budget exhausted", t, y);
      double h = std::min({h_, h_max_, t_end - t});
      const bool last = (t + h >= t_end) || (t_end - (t + h) < h_min);
      if (last) h = t_end - t;

      Vec y_new;
      const double err = try_step(f, y, h, y_new);
      if (!std::isfinite(err)) {
        h_ = 0.25 * h;
        if (h_ < h_min) fail("non-finite state", t, y);
        continue;
      }
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y = y_new;
        k1_ = k7_;
        fsal_valid_ = true;
        ++accepted_;
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // keep the pre-clipping step size for the next call
        if (!last || h >= h_) h_ = h * fac;
      } else {
        ++rejected_;
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        fsal_valid_ = false;
        if (h_ < h_min) fail("step size underflow", t, y);
      }
    }
  }

  void set_max_steps(std::size_t n) { max_steps_ = n; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

 private:
  template <class F>
  double initial_step(F&& f, const Vec& y, double span) {
    const Vec d = f(y);
    double dn = 0.0, yn = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol_ * (1.0 + std::abs(y[i]));
      dn = std::max(dn, std::abs(d[i]) / sc);
      yn = std::max(yn, std::abs(y[i]) / sc);
    }
    double h = (dn < 1e-10) ? 1e-3 * span : 0.01 * std::max(1.0, yn) / dn;
    return std::min({h, span, h_max_});
  }

  template <class F>
  double try_step(F&& f, const Vec& y, double h, Vec& y_new) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                            b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    if (!fsal_valid_) k1_ = f(y);
    Vec tmp;
    auto stage = [&](auto&& combine) {
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * combine(i);
      return f(tmp);
    };
    const Vec k2 = stage([&](std::size_t i) { return a21 * k1_[i]; });
    const Vec k3 = stage([&](std::size_t i) { return a31 * k1_[i] + a32 * k2[i]; });
    const Vec k4 = stage([&](std::size_t i) { return a41 * k1_[i] + a42 * k2[i] + a43 * k3[i]; });
    const Vec k5 = stage([&](std::size_t i) { return a51 * k1_[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; });
    const Vec k6 =
        stage([&](std::size_t i) { return a61 * k1_[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]; });
    for (std::size_t i = 0; i < N; ++i) {
      y_new[i] = y[i] + h * (b1 * k1_[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    k7_ = f(y_new);

    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7_[i]);
      const double sc = tol_ * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
      sum += (e / sc) * (e / sc);
    }
    return std::sqrt(sum / N);
  }

  [[noreturn]] void fail(const char* why, double t, const Vec& y) const {
    std::ostringstream os;
    os << "integrator: " << why << " at t = " << t << " min, state = [";
    for (std::size_t i = 0; i < N; ++i) os << (i ? ", " : "") << y[i];
    os << "]";
    throw NumericalError(os.str());
  }

  double tol_;
  double h_max_;
  double h_ = 0.0;
  bool fsal_valid_ = false;
  Vec k1_{};
  Vec k7_{};
  std::size_t steps_ = 0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t max_steps_ = 50'000'000;
};

/// Integrates an autonomous system under a piecewise-constant input schedule.
///
/// `rhs(state, inputs)` returns the derivative. `enter(state, inputs)` is
/// applied at the start of every segment (e.g. to pin intracellular inducers
/// to the medium under instantaneous diffusion). Samples are appended at each
/// segment start, at every multiple of `output_dt` inside a segment and, when
/// `emit_final` is set, at the end of the last segment.
template <class State, class Rhs, class Enter>
State integrate(Rhs&& rhs, Enter&& enter, State x0, std::span<const InputSegment> schedule,
                const IntegratorOptions& opt, Trajectory<State>& out, bool emit_final = true) {
  validate_schedule(schedule);
  constexpr std::size_t N = State::size;
  DormandPrince<N> stepper(opt.tol, opt.h_max);
  stepper.set_max_steps(opt.max_steps);

  State x = x0;
  for (const InputSegment& seg : schedule) {
    enter(x, seg.u);
    auto y = x.as_array();
    for (double v : y) {
      if (!std::isfinite(v)) throw NumericalError("integrator: non-finite initial state at t = " + std::to_string(seg.t_begin));
    }
    auto f = [&](const std::array<double, N>& v) { return rhs(State::from_array(v), seg.u).as_array(); };

    double t = seg.t_begin;
    out.append({t, x, seg.u, seg.duty});
    for (double idx = std::floor(t / opt.output_dt) + 1.0;; idx += 1.0) {
      const double next = idx * opt.output_dt;
      if (!(next < seg.t_end - 1e-9 * opt.output_dt)) break;
      stepper.advance(f, t, y, next);
      out.append({t, State::from_array(y), seg.u, seg.duty});
    }
    stepper.advance(f, t, y, seg.t_end);
    x = State::from_array(y);
  }
  if (emit_final && !schedule.empty()) {
    const InputSegment& last = schedule.back();
    out.append({last.t_end, x, last.u, last.duty});
  }
  return x;
}

template <class State, class Rhs>
State integrate(Rhs&& rhs, State x0, std::span<const InputSegment> schedule, const IntegratorOptions& opt,
                Trajectory<State>& out, bool emit_final = true) {
  return integrate(std::forward<Rhs>(rhs), [](State&, Inputs) {}, x0, schedule, opt, out, emit_final);
}

}  // namespace toggle
