#include "toggle/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "toggle/errors.hpp"

namespace toggle {
namespace {

double interp(std::span<const double> t, std::span<const double> v, std::size_t i, double x) {
  const double span = t[i + 1] - t[i];
  const double w = span > 0.0 ? std::clamp((x - t[i]) / span, 0.0, 1.0) : 0.0;
  return v[i] + w * (v[i + 1] - v[i]);
}

double signal_integral(std::span<const double> t, std::span<const double> v, double a, double b) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double lo = std::max(a, t[i]);
    const double hi = std::min(b, t[i + 1]);
    if (!(hi > lo)) continue;
    acc += 0.5 * (hi - lo) * (interp(t, v, i, lo) + interp(t, v, i, hi));
  }
  return acc;
}

SignalStats time_stats(std::span<const double> t, std::span<const double> v, double a, double b) {
  const double mean = signal_mean(t, v, a, b);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(std::max(0.0, signal_mean(t, dev, a, b)))};
}

double rel_error(double mean, double ref) { return ref > 0.0 ? std::abs(mean - ref) / ref : std::abs(mean - ref); }

}  // namespace

double signal_mean(std::span<const double> t, std::span<const double> v, double a, double b) {
  if (!(b > a)) throw ValidationError("window", "empty window");
  return signal_integral(t, v, a, b) / (b - a);
}

SummaryMetrics summarize(std::span<const Trajectory<FullState>> cells, const ExperimentConfig& cfg, double window_h) {
  if (cells.empty() || cells.front().samples.size() < 2) throw ValidationError("trajectories", "no samples");
  if (!(window_h > 0.0)) throw ValidationError("window", "must be > 0");
  const auto& ref_samples = cells.front().samples;
  for (const auto& c : cells) {
    if (c.samples.size() != ref_samples.size()) throw ValidationError("trajectories", "cells have different sample grids");
  }
  const double t0 = ref_samples.front().t;
  const double t1 = ref_samples.back().t;
  const double w = window_h * 60.0;
  if (w > t1 - t0 + 1e-9 * std::max(1.0, t1)) {
    throw ValidationError("window", fmt::format("window of {} h is longer than the simulated span of {} h", window_h,
                                                (t1 - t0) / 60.0));
  }
  if (cfg.target_cell < 0 || static_cast<std::size_t>(cfg.target_cell) >= cells.size()) {
    throw ValidationError("target_cell", "no such cell in the trajectories");
  }

  SummaryMetrics m;
  m.window_start = t1 - w;
  m.window_end = t1;
  m.target_cell = cfg.target_cell;
  m.n_cells = static_cast<int>(cells.size());
  const double a = m.window_start;
  const double b = m.window_end;

  const std::size_t ns = ref_samples.size();
  std::vector<double> t(ns);
  for (std::size_t i = 0; i < ns; ++i) t[i] = ref_samples[i].t;

  const auto& target = cells[static_cast<std::size_t>(cfg.target_cell)].samples;
  std::vector<double> laci(ns), tetr(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    laci[i] = target[i].x.laci;
    tetr[i] = target[i].x.tetr;
  }
  m.target_laci = time_stats(t, laci, a, b);
  m.target_tetr = time_stats(t, tetr, a, b);
  m.laci_error = rel_error(m.target_laci.mean, cfg.laci_ref);
  m.tetr_error = rel_error(m.target_tetr.mean, cfg.tetr_ref);

  // Cross-sectional mean and sd (denominator n) at every sample time.
  auto cross_section = [&](bool skip_target, auto field, std::vector<double>& mean, std::vector<double>& sd) {
    mean.assign(ns, 0.0);
    sd.assign(ns, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
      double s = 0.0;
      double s2 = 0.0;
      int n = 0;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (skip_target && c == static_cast<std::size_t>(cfg.target_cell)) continue;
        const double v = field(cells[c].samples[i].x);
        s += v;
        ++n;
      }
      if (n == 0) continue;
      mean[i] = s / n;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (skip_target && c == static_cast<std::size_t>(cfg.target_cell)) continue;
        const double d = field(cells[c].samples[i].x) - mean[i];
        s2 += d * d;
      }
      sd[i] = std::sqrt(s2 / n);
    }
  };
  auto laci_of = [](const FullState& x) { return x.laci; };
  auto tetr_of = [](const FullState& x) { return x.tetr; };
  std::vector<double> mean, sd;
  cross_section(false, laci_of, mean, sd);
  m.population_laci = {signal_mean(t, mean, a, b), signal_mean(t, sd, a, b)};
  cross_section(false, tetr_of, mean, sd);
  m.population_tetr = {signal_mean(t, mean, a, b), signal_mean(t, sd, a, b)};
  m.population_laci_error = rel_error(m.population_laci.mean, cfg.laci_ref);
  m.population_tetr_error = rel_error(m.population_tetr.mean, cfg.tetr_ref);
  if (cells.size() > 1) {
    cross_section(true, laci_of, mean, sd);
    m.nontarget_laci_sd = signal_mean(t, sd, a, b);
  }

  // Per-period quantities over the full periods inside the window.
  const double T = cfg.pulse.period;
  const bool periodic = cfg.controller != ControllerKind::pi_population;
  if (periodic) {
    const int k_first = static_cast<int>(std::ceil(a / T - 1e-9));
    const int k_last = static_cast<int>(std::floor(b / T + 1e-9));  // exclusive end
    std::vector<double> sigma(ns);
    for (std::size_t i = 0; i < ns; ++i) sigma[i] = (laci[i] - cfg.laci_ref) / cfg.params.theta_LacI;
    for (int k = k_first; k < k_last; ++k) {
      const double pa = k * T;
      const double pb = (k + 1) * T;
      auto it = std::lower_bound(t.begin(), t.end(), pa);
      if (it != t.end()) {
        const double d = target[static_cast<std::size_t>(it - t.begin())].duty;
        if (!std::isnan(d)) m.duties.emplace_back(k, d);
      }
      double max_abs = 0.0;
      for (std::size_t i = 0; i < ns; ++i)
        if (t[i] >= pa && t[i] <= pb) max_abs = std::max(max_abs, std::abs(sigma[i]));
      m.sigma_periods.push_back(k);
      m.sigma_integral.push_back(signal_integral(t, sigma, pa, pb));
      m.sigma_max_abs.push_back(max_abs);
    }
    const std::size_t n = m.sigma_periods.size();
    const std::size_t first = n > 6 ? n - 6 : 0;
    double mean_abs = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = first; i < n; ++i) {
      mean_abs += std::abs(m.sigma_integral[i]);
      max_abs = std::max(max_abs, m.sigma_max_abs[i]);
    }
    if (n > first) {
      mean_abs /= static_cast<double>(n - first);
      m.sigma_ratio = max_abs > 0.0 ? mean_abs / (T * max_abs) : 0.0;
    }
  }
  return m;
}

void write_metrics_csv(std::ostream& os, const SummaryMetrics& m) {
  auto row = [&os](const std::string& name, double v) { os << name << "," << fmt::format("{:.10g}", v) << "\n"; };
  os << "metric,value\n";
  row("window_start_min", m.window_start);
  row("window_end_min", m.window_end);
  row("n_cells", m.n_cells);
  row("target_cell", m.target_cell);
  row("sd_denominator_is_n", 1);
  row("target.laci.mean", m.target_laci.mean);
  row("target.laci.sd", m.target_laci.sd);
  row("target.tetr.mean", m.target_tetr.mean);
  row("target.tetr.sd", m.target_tetr.sd);
  row("target.laci.reg_error", m.laci_error);
  row("target.tetr.reg_error", m.tetr_error);
  row("population.laci.mean", m.population_laci.mean);
  row("population.laci.sd", m.population_laci.sd);
  row("population.tetr.mean", m.population_tetr.mean);
  row("population.tetr.sd", m.population_tetr.sd);
  row("population.laci.reg_error", m.population_laci_error);
  row("population.tetr.reg_error", m.population_tetr_error);
  if (m.n_cells > 1) row("nontarget.laci.sd", m.nontarget_laci_sd);
  for (const auto& [k, d] : m.duties) row(fmt::format("duty.{}", k), d);
  for (std::size_t i = 0; i < m.sigma_periods.size(); ++i) {
    row(fmt::format("sigma.integral.{}", m.sigma_periods[i]), m.sigma_integral[i]);
  }
  if (!m.sigma_periods.empty()) row("sigma.final6_ratio", m.sigma_ratio);
  for (const auto& [name, v] : m.extra) row(name, v);
}

}  // namespace toggle
