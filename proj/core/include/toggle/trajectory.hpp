#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "toggle/errors.hpp"
#include "toggle/model.hpp"

namespace toggle {

/// Constant medium inputs over [t_begin, t_end).
struct InputSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  Inputs u;
  /// aTc-phase duty of the period this segment belongs to; NaN for non-PWM inputs.
  double duty = std::numeric_limits<double>::quiet_NaN();
};

/// One period of mutually exclusive pulses starting at period_start.
/// Zero-length phases are omitted.
std::vector<InputSegment> pwm_period_schedule(double period_start, const PulseWaveSpec& spec);

/// Two independent pulse trains sharing the carrier (both start on at
/// period_start). Used by the population-PI PWM benchmark.
std::vector<InputSegment> independent_pwm_schedule(double period_start, double period, double duty_atc,
                                                   double amp_atc, double duty_iptg, double amp_iptg);

/// Checks contiguity, positive lengths and nonnegative inputs.
void validate_schedule(std::span<const InputSegment> schedule);

template <class State>
struct TrajectorySample {
  double t = 0.0;
  State x;
  Inputs u;  // medium inputs in effect from t onward
  double duty = std::numeric_limits<double>::quiet_NaN();
};

template <class State>
struct Trajectory {
  int cell_id = 0;
  std::vector<TrajectorySample<State>> samples;

  /// Appends a sample. A sample at the current end time replaces the stored
  /// one (same state, inputs switched at that instant).
  void append(const TrajectorySample<State>& s) {
    if (!samples.empty() && s.t == samples.back().t) {
      samples.back() = s;
      return;
    }
    if (!samples.empty() && !(s.t > samples.back().t)) {
      throw NumericalError("trajectory sample times must be strictly increasing (t = " + std::to_string(s.t) + ")");
    }
    samples.push_back(s);
  }
  bool empty() const { return samples.empty(); }
  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
};

namespace detail {

template <class State>
State lerp(const State& a, const State& b, double w) {
  auto va = a.as_array();
  const auto vb = b.as_array();
  for (std::size_t i = 0; i < va.size(); ++i) va[i] += w * (vb[i] - va[i]);
  return State::from_array(va);
}

}  // namespace detail

/// Trapezoidal average of the stored state over [a, b]; window ends falling
/// between samples are linearly interpolated.
template <class State>
State window_average(const Trajectory<State>& traj, double a, double b) {
  const double slack = 1e-9 * std::max(1.0, std::abs(b));
  if (!(b > a)) throw ValidationError("window", "empty averaging window");
  if (traj.samples.size() < 2 || traj.t_begin() > a + slack || traj.t_end() < b - slack) {
    throw ValidationError("window", "trajectory does not cover [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  const auto& s = traj.samples;
  auto value_at = [&](std::size_t i, double t) {
    // state at t within [s[i].t, s[i+1].t]
    const double span = s[i + 1].t - s[i].t;
    const double w = span > 0.0 ? (t - s[i].t) / span : 0.0;
    return detail::lerp(s[i].x, s[i + 1].x, std::clamp(w, 0.0, 1.0));
  };

  std::array<double, State::size> acc{};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double lo = std::max(a, s[i].t);
    const double hi = std::min(b, s[i + 1].t);
    if (!(hi > lo)) continue;
    const auto xa = value_at(i, lo).as_array();
    const auto xb = value_at(i, hi).as_array();
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += 0.5 * (hi - lo) * (xa[j] + xb[j]);
  }
  for (double& v : acc) v /= (b - a);
  return State::from_array(acc);
}

/// Average over the k-th period [kT, (k+1)T].
template <class State>
State period_average(const Trajectory<State>& traj, int k, double period) {
  if (k < 0) throw ValidationError("k", "period index must be >= 0");
  return window_average(traj, k * period, (k + 1) * period);
}

/// Linear interpolation of the stored state at time t.
template <class State>
State state_at(const Trajectory<State>& traj, double t) {
  const auto& s = traj.samples;
  if (s.empty() || t < s.front().t || t > s.back().t) throw ValidationError("t", "outside trajectory");
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const auto& smp, double v) { return smp.t < v; });
  if (it->t == t) return it->x;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  return detail::lerp(lo.x, hi.x, (t - lo.t) / (hi.t - lo.t));
}

}  // namespace toggle
