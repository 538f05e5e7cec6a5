#include "toggle/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "toggle/errors.hpp"

namespace toggle {

double PiChannel::step(double error, double dt) {
  const double candidate = accumulator + error * dt;
  const double raw = bias + kp * error + ki * candidate;
  const double u = std::clamp(raw, u_min, u_max);
  saturated_ = raw != u;
  if (!(anti_windup && saturated_)) accumulator = candidate;
  return u;
}

PopulationPi PopulationPi::with_gains(double kp_laci, double ki_laci, double kp_tetr, double ki_tetr, Inputs limits,
                                      bool anti_windup) {
  auto channel = [anti_windup](double kp, double ki, double u_max) {
    PiChannel c;
    c.kp = kp;
    c.ki = ki;
    c.u_max = u_max;
    c.anti_windup = anti_windup;
    return c;
  };
  return {channel(kp_laci, ki_laci, limits.atc), channel(kp_tetr, ki_tetr, limits.iptg)};
}

Inputs PopulationPi::step(double mean_laci, double mean_tetr, double laci_ref, double tetr_ref, double dt) {
  return {atc.step(laci_ref - mean_laci, dt), iptg.step(tetr_ref - mean_tetr, dt)};
}

std::pair<double, double> pwm_duties(Inputs pi_output, Inputs amplitudes) {
  auto duty = [](double u, double amp) { return amp > 0.0 ? std::clamp(u / amp, 0.0, 1.0) : 0.0; };
  return {duty(pi_output.atc, amplitudes.atc), duty(pi_output.iptg, amplitudes.iptg)};
}

PipwmController PipwmController::init(const ReducedState& target, const CurveDatabase& db, PipwmGains gains,
                                      bool anti_windup) {
  const NearestPoint np = nearest_point(db, target);
  return init_on_curve(target, db.curve(np.curve_id), gains, anti_windup);
}

PipwmController PipwmController::init_on_curve(const ReducedState& target, const EquilibriumCurve& curve,
                                               PipwmGains gains, bool anti_windup) {
  if (!target.valid()) throw ValidationError("target", "must be finite and nonnegative");
  const PolylineProjection pr = project_onto(curve, target);
  PipwmController c;
  c.curve_ = curve;
  c.target_ = target;
  c.reference_ = pr.point;
  c.gains_ = gains;
  c.anti_windup_ = anti_windup;
  c.duty_ref_ = pr.duty;
  c.duty_ = pr.duty;
  return c;
}

double PipwmController::update(const ReducedState& avg_state) {
  const ProjectionResult pr = project_and_error(curve_, reference_, avg_state);
  last_error_ = pr.e_pi;
  const double candidate = accumulator_ + pr.e_pi;
  const double raw = duty_ref_ + gains_.kp * pr.e_pi + gains_.ki * candidate;
  duty_ = std::clamp(raw, 0.0, 1.0);
  if (!(anti_windup_ && raw != duty_)) accumulator_ = candidate;
  return duty_;
}

double zad_sigma(double laci, double laci_ref, const ModelParams& p) { return (laci - laci_ref) / p.theta_LacI; }

double zad_sigma_dot(const ReducedState& x, PulsePhase phase, Inputs amplitudes, const ReducedParams& rp,
                     const ModelParams& p) {
  const double w1 = phase == PulsePhase::on ? hill_w1(amplitudes.atc, p) : 1.0;
  const double w2 = phase == PulsePhase::on ? 1.0 : hill_w2(amplitudes.iptg, p);
  return rp.g_p * qss_rhs(x, w1, w2, rp).x1;
}

double zad_duty(double sigma, double sdot_on, double sdot_off, double period, double previous) {
  if (!(period > 0.0)) throw ValidationError("period", "must be > 0");
  const double den = period * (sdot_on - sdot_off);
  if (std::abs(den) < 1e-12) return previous;
  const double r = (2.0 * sigma + period * sdot_on) / den;
  if (r < 0.0) return 1.0;
  if (r > 1.0) return 0.0;
  return 1.0 - std::sqrt(r);
}

ZadController::ZadController(double laci_ref, Inputs amplitudes, double period, const ModelParams& p,
                             double initial_duty)
    : laci_ref_(laci_ref), amplitudes_(amplitudes), period_(period), p_(p), rp_(reduce_params(p)),
      duty_(initial_duty) {
  if (!(laci_ref >= 0.0)) throw ValidationError("laci_ref", "must be >= 0");
  if (!(period > 0.0)) throw ValidationError("period", "must be > 0");
  if (!(initial_duty >= 0.0 && initial_duty <= 1.0)) throw ValidationError("duty", "must be in [0, 1]");
}

double ZadController::update(const FullState& measured) {
  const ReducedState x = to_reduced(measured.laci, measured.tetr, p_);
  sigma_ = zad_sigma(measured.laci, laci_ref_, p_);
  sdot_on_ = zad_sigma_dot(x, PulsePhase::on, amplitudes_, rp_, p_);
  sdot_off_ = zad_sigma_dot(x, PulsePhase::off, amplitudes_, rp_, p_);
  duty_ = zad_duty(sigma_, sdot_on_, sdot_off_, period_, duty_);
  return duty_;
}

}  // namespace toggle
