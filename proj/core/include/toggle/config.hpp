#pragma once

// Experiment configuration: INI-style `key = value` file with one section per
// concern. Every key has a default; unknown sections and keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "toggle/controllers.hpp"
#include "toggle/model.hpp"
#include "toggle/simulate.hpp"

namespace toggle {

enum class ControllerKind { none, pi_population, pi_population_pwm, pipwm, zad, feedforward };
enum class InitialCondition { high_laci, low_laci };
enum class Measurement { target, mean };
enum class AmplitudeSelection { automatic, fixed };

std::string_view to_string(ControllerKind k);
std::string_view to_string(SimKind k);
std::string_view to_string(DiffusionMode m);

struct ExperimentConfig {
  // [model]
  std::string param_set = "lugagne2017";
  ModelParams params;

  // [sim]
  SimKind kind = SimKind::deterministic;
  DiffusionMode diffusion = DiffusionMode::dynamic;
  double horizon_h = 48.0;
  int n_cells = 1;
  std::uint64_t seed = 1;
  double omega = 1.0;
  double tol = 1e-8;
  double refresh_min = 1.0;
  double output_dt_min = 1.0;
  InitialCondition initial = InitialCondition::high_laci;

  // [control]
  ControllerKind controller = ControllerKind::none;
  double laci_ref = 750.0;
  double tetr_ref = 300.0;
  int target_cell = 0;
  Measurement measure = Measurement::target;
  bool anti_windup = true;
  AmplitudeSelection select_amplitudes = AmplitudeSelection::automatic;

  // [pulse]
  PulseWaveSpec pulse{50.0, 0.5, 240.0, 0.5};

  // [pi]
  double kp_laci = 0.05;
  double ki_laci = 4e-4;
  double kp_tetr = 0.025;
  double ki_tetr = 6.94e-4;
  double pi_sample_min = 5.0;

  // [pipwm]
  PipwmGains pipwm;

  // [output]
  double window_h = 24.0;

  /// Throws ValidationError naming the offending key ("section.key").
  void validate() const;
  double horizon_min() const { return horizon_h * 60.0; }
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// Full effective configuration in the input format; parse_config of the
/// result reproduces the configuration exactly.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace toggle
