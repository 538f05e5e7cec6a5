#pragma once

// Experiment orchestration: builds the controller hook for a configuration,
// runs the population and writes the output directory.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "toggle/config.hpp"
#include "toggle/equilibria.hpp"
#include "toggle/metrics.hpp"
#include "toggle/simulate.hpp"

namespace toggle {

struct ControllerLogRow {
  int period_k = 0;
  double error = 0.0;  // e_pi, sigma_k or the LacI error, depending on the controller
  double duty = 0.0;
  double accumulator = 0.0;
};

struct ExperimentResult {
  std::vector<Trajectory<FullState>> cells;
  std::vector<ControllerLogRow> log;
  SummaryMetrics metrics;
};

/// Initial full state: the unforced stable equilibrium selected by cfg.initial
/// with quasi-steady mRNA and no intracellular inducer.
FullState initial_state(const ExperimentConfig& cfg);

/// `db` is used for automatic amplitude selection; when null the default
/// 60-curve database is built on demand.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const CurveDatabase* db = nullptr);

void write_trajectories_csv(std::ostream& os, std::span<const Trajectory<FullState>> cells);
std::vector<Trajectory<FullState>> read_trajectories_csv(std::istream& is);
void write_controller_log_csv(std::ostream& os, std::span<const ControllerLogRow> rows);

inline constexpr const char* kConfigEcho = "config.effective.cfg";
inline constexpr const char* kTrajectoriesCsv = "trajectories.csv";
inline constexpr const char* kControllerLogCsv = "controller_log.csv";
inline constexpr const char* kMetricsCsv = "metrics.csv";

/// Writes the four output files. Existing outputs are only replaced with `force`.
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& result,
                   bool force);

/// Re-reads an output directory and recomputes the summary over `window_h`.
SummaryMetrics summarize_directory(const std::filesystem::path& dir, double window_h);

}  // namespace toggle
