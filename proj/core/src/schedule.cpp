#include <algorithm>
#include <cmath>
#include <string>

#include "toggle/trajectory.hpp"

namespace toggle {

std::vector<InputSegment> pwm_period_schedule(double period_start, const PulseWaveSpec& spec) {
  spec.validate();
  const double edge = period_start + spec.duty * spec.period;
  const double end = period_start + spec.period;
  std::vector<InputSegment> out;
  if (edge > period_start) out.push_back({period_start, std::min(edge, end), {spec.amp_atc, 0.0}, spec.duty});
  if (end > edge) out.push_back({edge, end, {0.0, spec.amp_iptg}, spec.duty});
  return out;
}

std::vector<InputSegment> independent_pwm_schedule(double period_start, double period, double duty_atc,
                                                   double amp_atc, double duty_iptg, double amp_iptg) {
  const double end = period_start + period;
  const double e1 = period_start + std::clamp(duty_atc, 0.0, 1.0) * period;
  const double e2 = period_start + std::clamp(duty_iptg, 0.0, 1.0) * period;
  std::vector<double> cuts{period_start, std::min(e1, e2), std::max(e1, e2), end};
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<InputSegment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (!(b > a)) continue;
    Inputs u{a < e1 ? amp_atc : 0.0, a < e2 ? amp_iptg : 0.0};
    out.push_back({a, b, u, duty_atc});
  }
  return out;
}

void validate_schedule(std::span<const InputSegment> schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& s = schedule[i];
    if (!(s.t_end > s.t_begin)) throw ValidationError("schedule", "segment " + std::to_string(i) + " has no length");
    if (!(s.u.atc >= 0.0) || !(s.u.iptg >= 0.0)) {
      throw ValidationError("schedule", "segment " + std::to_string(i) + " has a negative input");
    }
    if (i > 0 && schedule[i - 1].t_end != s.t_begin) {
      throw ValidationError("schedule", "segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                            " are not contiguous");
    }
  }
}

}  // namespace toggle
