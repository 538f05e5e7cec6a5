#pragma once

// Cell-level and population-level simulation drivers on top of the
// integrator and the SSA.

#include <cstdint>
#include <span>
#include <vector>

#include "toggle/integrator.hpp"
#include "toggle/model.hpp"
#include "toggle/ssa.hpp"
#include "toggle/trajectory.hpp"

namespace toggle {

/// Full six-state model. Under instantaneous diffusion the intracellular
/// inducers jump to the medium levels at every segment start.
FullState simulate_full(const FullState& x0, std::span<const InputSegment> schedule, const ModelParams& p,
                        DiffusionMode diffusion, const IntegratorOptions& opt, Trajectory<FullState>& out);

/// QSS model in minutes (dx/dt = g_p * qss_rhs) with instantaneous diffusion.
ReducedState simulate_qss(const ReducedState& x0, std::span<const InputSegment> schedule, const ModelParams& p,
                          const IntegratorOptions& opt, Trajectory<ReducedState>& out);

enum class SimKind { deterministic, ssa };

struct PopulationConfig {
  SimKind kind = SimKind::deterministic;
  int n_cells = 1;
  std::uint64_t seed = 1;
  double omega = 1.0;
  DiffusionMode diffusion = DiffusionMode::dynamic;
  ModelParams params;
  double horizon = 48.0 * 60.0;  // minutes
  IntegratorOptions integrator;
  SsaOptions ssa;
  FullState initial;  // concentrations; SSA cells start at the rounded copy numbers
};

/// Supplies medium inputs one control interval at a time and observes the
/// population at each interval boundary. Every cell receives the same inputs.
class ControlHook {
 public:
  virtual ~ControlHook() = default;
  /// Contiguous segments starting at t; the interval ends at the last segment's end.
  virtual std::vector<InputSegment> next_interval(double t) = 0;
  /// Called after all cells reached t_end; trajectories include the sample at t_end.
  virtual void observe(double t_end, std::span<const Trajectory<FullState>> cells) = 0;
};

/// Runs all cells from t = 0 to the horizon. Cells are advanced one interval
/// at a time between controller synchronisation points.
std::vector<Trajectory<FullState>> simulate_population(const PopulationConfig& cfg, ControlHook& hook);

}  // namespace toggle
