#include "toggle/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "toggle/controllers.hpp"
#include "toggle/errors.hpp"

namespace toggle {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class ExperimentHook : public ControlHook {
 public:
  ExperimentHook(const ExperimentConfig& cfg, FullState initial) : cfg_(cfg), initial_(initial) {}

  void observe(double t_end, std::span<const Trajectory<FullState>> cells) override {
    cells_ = cells;
    on_observe(t_end);
  }

  std::vector<ControllerLogRow> log;
  std::vector<std::pair<std::string, double>> extra;

 protected:
  virtual void on_observe(double /*t_end*/) {}

  const Trajectory<FullState>& target() const { return cells_[static_cast<std::size_t>(cfg_.target_cell)]; }

  /// State at the current synchronisation point.
  FullState current_state(bool population_mean) const {
    if (cells_.empty()) return initial_;
    if (!population_mean) return target().samples.back().x;
    std::array<double, FullState::size> acc{};
    for (const auto& c : cells_) {
      const auto v = c.samples.back().x.as_array();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    for (double& v : acc) v /= static_cast<double>(cells_.size());
    return FullState::from_array(acc);
  }

  FullState window_state(double a, double b, bool population_mean) const {
    if (!population_mean) return window_average(target(), a, b);
    std::array<double, FullState::size> acc{};
    for (const auto& c : cells_) {
      const auto v = window_average(c, a, b).as_array();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    for (double& v : acc) v /= static_cast<double>(cells_.size());
    return FullState::from_array(acc);
  }

  bool use_mean() const { return cfg_.measure == Measurement::mean; }

  const ExperimentConfig& cfg_;
  FullState initial_;
  std::span<const Trajectory<FullState>> cells_;
};

class OpenLoopHook : public ExperimentHook {
 public:
  using ExperimentHook::ExperimentHook;
  std::vector<InputSegment> next_interval(double t) override {
    const int k = static_cast<int>(std::lround(t / cfg_.pulse.period));
    log.push_back({k, kNaN, cfg_.pulse.duty, kNaN});
    return pwm_period_schedule(t, cfg_.pulse);
  }
};

class PopulationPiHook : public ExperimentHook {
 public:
  PopulationPiHook(const ExperimentConfig& cfg, FullState initial, bool pwm)
      : ExperimentHook(cfg, initial),
        pwm_(pwm),
        pi_(PopulationPi::with_gains(cfg.kp_laci, cfg.ki_laci, cfg.kp_tetr, cfg.ki_tetr,
                                     {cfg.pulse.amp_atc, cfg.pulse.amp_iptg}, cfg.anti_windup)) {}

  std::vector<InputSegment> next_interval(double t) override {
    const FullState mean = current_state(true);
    const double dt = pwm_ ? cfg_.pulse.period : cfg_.pi_sample_min;
    const Inputs u = pi_.step(mean.laci, mean.tetr, cfg_.laci_ref, cfg_.tetr_ref, dt);
    const double error = cfg_.laci_ref - mean.laci;
    if (!pwm_) {
      log.push_back({k_++, error, kNaN, pi_.atc.accumulator});
      return {{t, t + dt, u, kNaN}};
    }
    const auto [d_atc, d_iptg] = pwm_duties(u, {cfg_.pulse.amp_atc, cfg_.pulse.amp_iptg});
    log.push_back({k_++, error, d_atc, pi_.atc.accumulator});
    return independent_pwm_schedule(t, dt, d_atc, cfg_.pulse.amp_atc, d_iptg, cfg_.pulse.amp_iptg);
  }

 private:
  bool pwm_;
  PopulationPi pi_;
  int k_ = 0;
};

class PipwmHook : public ExperimentHook {
 public:
  PipwmHook(const ExperimentConfig& cfg, FullState initial, PipwmController ctrl)
      : ExperimentHook(cfg, initial), ctrl_(std::move(ctrl)) {
    extra.emplace_back("pipwm.curve_id", ctrl_.curve_id());
    extra.emplace_back("pipwm.amp_atc", ctrl_.amplitudes().atc);
    extra.emplace_back("pipwm.amp_iptg", ctrl_.amplitudes().iptg);
    extra.emplace_back("pipwm.duty_ref", ctrl_.duty_ref());
    extra.emplace_back("pipwm.ref_x1", ctrl_.reference().x1);
    extra.emplace_back("pipwm.ref_x2", ctrl_.reference().x2);
  }

  std::vector<InputSegment> next_interval(double t) override {
    t_start_ = t;
    PulseWaveSpec spec{ctrl_.amplitudes().atc, ctrl_.amplitudes().iptg, cfg_.pulse.period, ctrl_.duty()};
    return pwm_period_schedule(t, spec);
  }

 protected:
  void on_observe(double t_end) override {
    const double T = cfg_.pulse.period;
    if (t_end - t_start_ < T * (1.0 - 1e-9)) return;  // clipped final period
    const FullState avg = window_state(t_start_, t_end, use_mean());
    const double d = ctrl_.update(to_reduced(avg.laci, avg.tetr, cfg_.params));
    log.push_back({static_cast<int>(std::lround(t_start_ / T)), ctrl_.last_error(), d, ctrl_.accumulator()});
  }

 private:
  PipwmController ctrl_;
  double t_start_ = 0.0;
};

class ZadHook : public ExperimentHook {
 public:
  ZadHook(const ExperimentConfig& cfg, FullState initial)
      : ExperimentHook(cfg, initial),
        ctrl_(cfg.laci_ref, {cfg.pulse.amp_atc, cfg.pulse.amp_iptg}, cfg.pulse.period, cfg.params, cfg.pulse.duty) {}

  std::vector<InputSegment> next_interval(double t) override {
    const double d = ctrl_.update(current_state(use_mean()));
    log.push_back({static_cast<int>(std::lround(t / cfg_.pulse.period)), ctrl_.sigma(), d, kNaN});
    PulseWaveSpec spec = cfg_.pulse;
    spec.duty = d;
    return pwm_period_schedule(t, spec);
  }

 private:
  ZadController ctrl_;
};

PopulationConfig population_config(const ExperimentConfig& cfg) {
  PopulationConfig pc;
  pc.kind = cfg.kind;
  pc.n_cells = cfg.n_cells;
  pc.seed = cfg.seed;
  pc.omega = cfg.omega;
  pc.diffusion = cfg.diffusion;
  pc.params = cfg.params;
  pc.horizon = cfg.horizon_min();
  pc.integrator.tol = cfg.tol;
  pc.integrator.output_dt = cfg.output_dt_min;
  pc.ssa.refresh = cfg.refresh_min;
  pc.ssa.output_dt = cfg.output_dt_min;
  pc.initial = initial_state(cfg);
  return pc;
}

PipwmController make_pipwm(const ExperimentConfig& cfg, const CurveDatabase* db) {
  const ReducedState target = to_reduced(cfg.laci_ref, cfg.tetr_ref, cfg.params);
  PipwmGains gains = cfg.pipwm;
  if (cfg.controller == ControllerKind::feedforward) gains = {0.0, 0.0};
  if (cfg.select_amplitudes == AmplitudeSelection::fixed) {
    const EquilibriumCurve curve =
        build_curve(0, {cfg.pulse.amp_atc, cfg.pulse.amp_iptg}, cfg.params, reduce_params(cfg.params), cfg.pulse.period);
    return PipwmController::init_on_curve(target, curve, gains, cfg.anti_windup);
  }
  if (db) return PipwmController::init(target, *db, gains, cfg.anti_windup);
  const CurveDatabase built = build_database(cfg.params);
  return PipwmController::init(target, built, gains, cfg.anti_windup);
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

FullState initial_state(const ExperimentConfig& cfg) {
  const ReducedParams rp = reduce_params(cfg.params);
  AvgModelInputs unforced{1.0, 1.0, 1.0, 0.5};
  std::vector<ReducedState> stable_eqs;
  for (const auto& e : all_equilibria(unforced, rp))
    if (stability(e, unforced, rp).stable) stable_eqs.push_back(e);
  if (stable_eqs.empty()) throw NumericalError("no stable unforced equilibrium");
  auto by_x1 = [](const ReducedState& l, const ReducedState& r) { return l.x1 < r.x1; };
  const ReducedState x = cfg.initial == InitialCondition::high_laci
                             ? *std::max_element(stable_eqs.begin(), stable_eqs.end(), by_x1)
                             : *std::min_element(stable_eqs.begin(), stable_eqs.end(), by_x1);
  return lift_reduced(x, {0.0, 0.0}, cfg.params);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const CurveDatabase* db) {
  cfg.validate();
  const PopulationConfig pc = population_config(cfg);

  std::unique_ptr<ExperimentHook> hook;
  switch (cfg.controller) {
    case ControllerKind::none:
      hook = std::make_unique<OpenLoopHook>(cfg, pc.initial);
      break;
    case ControllerKind::pi_population:
      hook = std::make_unique<PopulationPiHook>(cfg, pc.initial, false);
      break;
    case ControllerKind::pi_population_pwm:
      hook = std::make_unique<PopulationPiHook>(cfg, pc.initial, true);
      break;
    case ControllerKind::pipwm:
    case ControllerKind::feedforward:
      hook = std::make_unique<PipwmHook>(cfg, pc.initial, make_pipwm(cfg, db));
      break;
    case ControllerKind::zad:
      hook = std::make_unique<ZadHook>(cfg, pc.initial);
      break;
  }

  ExperimentResult result;
  result.cells = simulate_population(pc, *hook);
  result.log = std::move(hook->log);
  result.metrics = summarize(result.cells, cfg, std::min(cfg.window_h, cfg.horizon_h));
  result.metrics.extra = std::move(hook->extra);
  return result;
}

void write_trajectories_csv(std::ostream& os, std::span<const Trajectory<FullState>> cells) {
  os << "time_min,cell_id,mrna_laci,mrna_tetr,laci,tetr,atc_intra,iptg_intra,u_atc,u_iptg,duty\n";
  std::string line;
  for (const auto& c : cells) {
    for (const auto& s : c.samples) {
      line.clear();
      fmt::format_to(std::back_inserter(line), "{},{},{},{},{},{},{},{},{},{},{}\n", num(s.t), c.cell_id,
                     num(s.x.mrna_laci), num(s.x.mrna_tetr), num(s.x.laci), num(s.x.tetr), num(s.x.atc),
                     num(s.x.iptg), num(s.u.atc), num(s.u.iptg), num(s.duty));
      os << line;
    }
  }
}

std::vector<Trajectory<FullState>> read_trajectories_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "time_min,cell_id,mrna_laci,mrna_tetr,laci,tetr,atc_intra,iptg_intra,u_atc,u_iptg,duty") {
    throw ValidationError("trajectories", "unexpected CSV header");
  }
  std::vector<Trajectory<FullState>> cells;
  int line_no = 1;
  std::vector<double> f;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    f.clear();
    std::stringstream ss(line);
    std::string field;
    try {
      while (std::getline(ss, field, ',')) f.push_back(std::stod(field));
    } catch (const std::logic_error&) {
      throw ValidationError("trajectories", fmt::format("line {}: malformed number", line_no));
    }
    if (f.size() != 11) throw ValidationError("trajectories", fmt::format("line {}: expected 11 fields", line_no));
    const int id = static_cast<int>(f[1]);
    if (cells.empty() || cells.back().cell_id != id) {
      cells.emplace_back();
      cells.back().cell_id = id;
    }
    cells.back().append({f[0], {f[2], f[3], f[4], f[5], f[6], f[7]}, {f[8], f[9]}, f[10]});
  }
  std::sort(cells.begin(), cells.end(), [](const auto& l, const auto& r) { return l.cell_id < r.cell_id; });
  return cells;
}

void write_controller_log_csv(std::ostream& os, std::span<const ControllerLogRow> rows) {
  os << "period_k,error,duty,accumulator\n";
  for (const auto& r : rows) os << fmt::format("{},{},{},{}\n", r.period_k, num(r.error), num(r.duty), num(r.accumulator));
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& result,
                   bool force) {
  namespace fs = std::filesystem;
  const fs::path files[] = {dir / kConfigEcho, dir / kTrajectoriesCsv, dir / kControllerLogCsv, dir / kMetricsCsv};
  if (!force) {
    for (const auto& f : files) {
      if (fs::exists(f)) throw ValidationError("out", "'" + f.string() + "' exists; pass --force to overwrite");
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("out", "cannot create '" + dir.string() + "': " + ec.message());

  auto open = [](const fs::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("out", "cannot write '" + p.string() + "'");
    return os;
  };
  {
    auto os = open(files[0]);
    write_config(os, cfg);
  }
  {
    auto os = open(files[1]);
    write_trajectories_csv(os, result.cells);
  }
  {
    auto os = open(files[2]);
    write_controller_log_csv(os, result.log);
  }
  {
    auto os = open(files[3]);
    write_metrics_csv(os, result.metrics);
  }
}

SummaryMetrics summarize_directory(const std::filesystem::path& dir, double window_h) {
  const ExperimentConfig cfg = load_config((dir / kConfigEcho).string());
  std::ifstream in(dir / kTrajectoriesCsv);
  if (!in) throw ValidationError("dir", "cannot open '" + (dir / kTrajectoriesCsv).string() + "'");
  const auto cells = read_trajectories_csv(in);
  return summarize(cells, cfg, window_h);
}

}  // namespace toggle
