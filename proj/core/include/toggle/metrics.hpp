#pragma once

// Steady-window summary statistics of an experiment.

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toggle/config.hpp"
#include "toggle/trajectory.hpp"

namespace toggle {

struct SignalStats {
  double mean = 0.0;
  double sd = 0.0;
};

struct SummaryMetrics {
  double window_start = 0.0;  // minutes
  double window_end = 0.0;
  int target_cell = 0;
  int n_cells = 0;

  SignalStats target_laci;  // time mean and time sd of the target cell
  SignalStats target_tetr;
  // Population: time mean of the cross-sectional mean and of the
  // cross-sectional standard deviation (denominator n).
  SignalStats population_laci;
  SignalStats population_tetr;
  double nontarget_laci_sd = 0.0;  // same, excluding the target cell (n_cells > 1)

  double laci_error = 0.0;  // |mean - ref| / ref, target cell
  double tetr_error = 0.0;
  double population_laci_error = 0.0;
  double population_tetr_error = 0.0;

  std::vector<std::pair<int, double>> duties;  // (period index, aTc duty) inside the window

  // Sigma surface, one entry per full period inside the window.
  std::vector<int> sigma_periods;
  std::vector<double> sigma_integral;  // integral of sigma over the period (min)
  std::vector<double> sigma_max_abs;
  double sigma_ratio = 0.0;  // mean |integral| / (T max|sigma|) over the final 6 periods

  std::vector<std::pair<std::string, double>> extra;  // controller-specific values
};

/// Trapezoid mean of a piecewise-linear signal over [a, b].
double signal_mean(std::span<const double> t, std::span<const double> v, double a, double b);

/// Summary over the trailing `window_h` hours. Throws ValidationError if the
/// window is longer than the simulated span.
SummaryMetrics summarize(std::span<const Trajectory<FullState>> cells, const ExperimentConfig& cfg, double window_h);

void write_metrics_csv(std::ostream& os, const SummaryMetrics& m);

}  // namespace toggle
