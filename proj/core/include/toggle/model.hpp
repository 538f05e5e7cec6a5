#pragma once

// Toggle switch models: full transcription/translation model with membrane
// diffusion, nondimensional quasi-steady-state (QSS) model and the
// period-averaged model under mutually exclusive pulse-wave inputs.
//
// Time is in minutes everywhere in the public API.

#include <array>
#include <string>
#include <string_view>
#include <utility>

namespace toggle {

/// Rate and regulation constants. Defaults are the lugagne2017 parameter set.
struct ModelParams {
  // basal / regulated transcription (mRNA min^-1)
  double k_m0_L = 3.20e-2;
  double k_m0_T = 1.19e-1;
  double k_m_L = 8.30;
  double k_m_T = 2.06;
  // translation (protein mRNA^-1 min^-1)
  double k_p_L = 9.726e-1;
  double k_p_T = 1.170;
  // degradation (min^-1)
  double g_m_L = 1.386e-1;
  double g_m_T = 1.386e-1;
  double g_p_L = 1.65e-2;
  double g_p_T = 1.65e-2;
  // regulation thresholds
  double theta_LacI = 31.94;
  double theta_TetR = 30.00;
  double theta_aTc = 11.65;
  double theta_IPTG = 9.06e-2;
  // Hill exponents
  double eta_LacI = 2.0;
  double eta_TetR = 2.0;
  double eta_aTc = 2.0;
  double eta_IPTG = 2.0;
  // membrane exchange (min^-1)
  double k_in_aTc = 1.62e-1;
  double k_out_aTc = 2.00e-2;
  double k_in_IPTG = 2.75e-2;
  double k_out_IPTG = 1.11e-1;
  // fluorescence gains
  double k_RFP = 1.0;
  double k_GFP = 1.0;

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  /// Named parameter sets compiled into the library ("lugagne2017").
  static ModelParams named(std::string_view name);

  /// Field table used by the config loader and the effective-config echo.
  using Field = std::pair<std::string_view, double ModelParams::*>;
  static const std::array<Field, 24>& fields();
};

struct FullState {
  double mrna_laci = 0.0;
  double mrna_tetr = 0.0;
  double laci = 0.0;
  double tetr = 0.0;
  double atc = 0.0;   // intracellular
  double iptg = 0.0;  // intracellular

  static constexpr std::size_t size = 6;
  std::array<double, size> as_array() const { return {mrna_laci, mrna_tetr, laci, tetr, atc, iptg}; }
  static FullState from_array(const std::array<double, size>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool valid() const;
};

struct ReducedState {
  double x1 = 0.0;  // LacI / theta_LacI
  double x2 = 0.0;  // TetR / theta_TetR

  static constexpr std::size_t size = 2;
  std::array<double, size> as_array() const { return {x1, x2}; }
  static ReducedState from_array(const std::array<double, size>& a) { return {a[0], a[1]}; }
  bool valid() const;
};

struct ReducedParams {
  double k1_0 = 0.0;
  double k1 = 0.0;
  double k2_0 = 0.0;
  double k2 = 0.0;
  double g_p = 0.0;  // common protein degradation rate
};

/// Medium (extracellular) inducer concentrations.
struct Inputs {
  double atc = 0.0;
  double iptg = 0.0;
  friend bool operator==(const Inputs&, const Inputs&) = default;
};

/// Mutually exclusive pulse waves: aTc is on during the first duty*period of
/// each period and IPTG during the remainder.
struct PulseWaveSpec {
  double amp_atc = 0.0;
  double amp_iptg = 0.0;
  double period = 240.0;
  double duty = 0.5;

  void validate() const;
};

struct AvgModelInputs {
  double w1_bar = 1.0;
  double w2_bar = 1.0;
  double epsilon = 1.0;  // period * g_p
  double duty = 0.5;

  static AvgModelInputs from_pulse(const PulseWaveSpec& spec, const ModelParams& p);
  void validate() const;
};

enum class DiffusionMode { dynamic, instantaneous };

double hill_w1(double atc, const ModelParams& p);
double hill_w2(double iptg, const ModelParams& p);

/// Time derivative of the six-state model for the given medium inputs.
FullState full_rhs(const FullState& s, Inputs medium, const ModelParams& p);

/// Same model with intracellular inducers pinned to the medium values; the
/// inducer derivatives are zero.
FullState full_rhs_instantaneous(const FullState& s, Inputs medium, const ModelParams& p);

ReducedParams reduce_params(const ModelParams& p);

/// dx/dt' of the QSS model, t' = g_p t.
ReducedState qss_rhs(const ReducedState& x, double w1, double w2, const ReducedParams& rp);

/// dx/dtau of the averaged model, tau = t' / (T g_p).
ReducedState avg_rhs(const ReducedState& x, const AvgModelInputs& a, const ReducedParams& rp);

Inputs pulse_inputs(double t, const PulseWaveSpec& spec);

std::pair<double, double> output_map(const FullState& s, const ModelParams& p);

ReducedState to_reduced(double laci, double tetr, const ModelParams& p);
std::pair<double, double> from_reduced(const ReducedState& x, const ModelParams& p);

/// Quasi-steady mRNA levels and protein levels for a reduced state, with
/// inducers set to the given intracellular values.
FullState lift_reduced(const ReducedState& x, Inputs intracellular, const ModelParams& p);

}  // namespace toggle
