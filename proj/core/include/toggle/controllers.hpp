#pragma once

// Population PI benchmark, PI-PWM duty-cycle compensation on the averaged
// model and the Zero-Average-Dynamics (ZAD) duty-cycle law.

#include "toggle/equilibria.hpp"
#include "toggle/model.hpp"

namespace toggle {

/// Discrete PI channel with output limits and conditional integration.
struct PiChannel {
  double kp = 0.0;
  double ki = 0.0;
  double u_min = 0.0;
  double u_max = 1.0;
  double bias = 0.0;
  bool anti_windup = true;
  double accumulator = 0.0;  // sum of error * dt

  /// One update: integrates error*dt, returns the clamped output. With
  /// anti-windup the accumulator is left unchanged when the output saturates.
  double step(double error, double dt);
  bool saturated() const { return saturated_; }

 private:
  bool saturated_ = false;
};

/// Two independent PI loops: aTc from the LacI error, IPTG from the TetR error.
struct PopulationPi {
  PiChannel atc;
  PiChannel iptg;

  /// Paper gains with limits [0, amplitude] per channel.
  static PopulationPi with_gains(double kp_laci, double ki_laci, double kp_tetr, double ki_tetr, Inputs limits,
                                 bool anti_windup = true);

  Inputs step(double mean_laci, double mean_tetr, double laci_ref, double tetr_ref, double dt);
};

/// Per-channel duty cycles for the PWM-modulated benchmark: output divided by
/// the amplitude and clamped to [0, 1].
std::pair<double, double> pwm_duties(Inputs pi_output, Inputs amplitudes);

struct PipwmGains {
  double kp = 0.051;
  double ki = 2.37e-4;
};

class PipwmController {
 public:
  /// Inverts the averaged model through the database: picks the curve, the
  /// amplitudes and D_ref closest to `target`. D_0 = D_ref.
  static PipwmController init(const ReducedState& target, const CurveDatabase& db, PipwmGains gains = {},
                              bool anti_windup = true);
  /// Same, with the curve fixed in advance.
  static PipwmController init_on_curve(const ReducedState& target, const EquilibriumCurve& curve,
                                       PipwmGains gains = {}, bool anti_windup = true);

  /// One period update from the period-averaged measurement; returns D_k.
  double update(const ReducedState& avg_state);

  int curve_id() const { return curve_.id; }
  Inputs amplitudes() const { return curve_.amplitudes; }
  double duty_ref() const { return duty_ref_; }
  double duty() const { return duty_; }
  double accumulator() const { return accumulator_; }
  double last_error() const { return last_error_; }
  ReducedState reference() const { return reference_; }
  const EquilibriumCurve& curve() const { return curve_; }

 private:
  EquilibriumCurve curve_;
  ReducedState target_;
  ReducedState reference_;
  PipwmGains gains_;
  bool anti_windup_ = true;
  double duty_ref_ = 0.0;
  double duty_ = 0.0;
  double accumulator_ = 0.0;  // sum of e_pi
  double last_error_ = 0.0;
};

/// (laci - laci_ref) / theta_LacI.
double zad_sigma(double laci, double laci_ref, const ModelParams& p);

enum class PulsePhase { on, off };

/// Rate of change of sigma in min^-1 under the QSS model with instantaneous
/// diffusion: aTc at its amplitude during `on`, IPTG at its amplitude during `off`.
double zad_sigma_dot(const ReducedState& x, PulsePhase phase, Inputs amplitudes, const ReducedParams& rp,
                     const ModelParams& p);

/// ZAD duty cycle; r < 0 gives 1, r > 1 gives 0, a vanishing denominator holds `previous`.
double zad_duty(double sigma, double sdot_on, double sdot_off, double period, double previous);

class ZadController {
 public:
  ZadController(double laci_ref, Inputs amplitudes, double period, const ModelParams& p, double initial_duty = 0.5);

  /// Update from the state sampled at the start of period k; returns D_k.
  double update(const FullState& measured);

  double duty() const { return duty_; }
  double sigma() const { return sigma_; }
  double sdot_on() const { return sdot_on_; }
  double sdot_off() const { return sdot_off_; }
  double laci_ref() const { return laci_ref_; }
  Inputs amplitudes() const { return amplitudes_; }
  double period() const { return period_; }

 private:
  double laci_ref_;
  Inputs amplitudes_;
  double period_;
  ModelParams p_;
  ReducedParams rp_;
  double duty_;
  double sigma_ = 0.0;
  double sdot_on_ = 0.0;
  double sdot_off_ = 0.0;
};

}  // namespace toggle
