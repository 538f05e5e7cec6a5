#include "toggle/simulate.hpp"

#include <cmath>
#include <string>

#include "toggle/errors.hpp"

namespace toggle {

FullState simulate_full(const FullState& x0, std::span<const InputSegment> schedule, const ModelParams& p,
                        DiffusionMode diffusion, const IntegratorOptions& opt, Trajectory<FullState>& out) {
  if (diffusion == DiffusionMode::instantaneous) {
    return integrate(
        [&p](const FullState& s, Inputs u) { return full_rhs_instantaneous(s, u, p); },
        [](FullState& s, Inputs u) {
          s.atc = u.atc;
          s.iptg = u.iptg;
        },
        x0, schedule, opt, out);
  }
  return integrate([&p](const FullState& s, Inputs u) { return full_rhs(s, u, p); }, x0, schedule, opt, out);
}

ReducedState simulate_qss(const ReducedState& x0, std::span<const InputSegment> schedule, const ModelParams& p,
                          const IntegratorOptions& opt, Trajectory<ReducedState>& out) {
  const ReducedParams rp = reduce_params(p);
  return integrate(
      [&](const ReducedState& x, Inputs u) {
        const ReducedState d = qss_rhs(x, hill_w1(u.atc, p), hill_w2(u.iptg, p), rp);
        return ReducedState{rp.g_p * d.x1, rp.g_p * d.x2};
      },
      x0, schedule, opt, out);
}

std::vector<Trajectory<FullState>> simulate_population(const PopulationConfig& cfg, ControlHook& hook) {
  if (cfg.n_cells < 1) throw ValidationError("n_cells", "must be >= 1");
  if (!(cfg.horizon > 0.0)) throw ValidationError("horizon", "must be > 0");

  const auto n = static_cast<std::size_t>(cfg.n_cells);
  std::vector<Trajectory<FullState>> traj(n);
  for (std::size_t i = 0; i < n; ++i) traj[i].cell_id = static_cast<int>(i);

  std::vector<FullState> det_state(n, cfg.initial);
  std::vector<SsaCell> cells;
  ReactionNetwork net;
  const InducerKinetics kinetics = InducerKinetics::from(cfg.params, cfg.diffusion);
  if (cfg.kind == SimKind::ssa) {
    net = build_network(cfg.params, cfg.omega);
    for (std::size_t i = 0; i < n; ++i) {
      const int id = static_cast<int>(i);
      cells.push_back({id, state_to_counts(cfg.initial, cfg.omega), {cfg.initial.atc, cfg.initial.iptg},
                       cell_rng(cfg.seed, id)});
    }
  }

  const double eps = 1e-9 * cfg.horizon;
  double t = 0.0;
  int interval = 0;
  while (t < cfg.horizon - eps) {
    std::vector<InputSegment> sched = hook.next_interval(t);
    if (sched.empty() || sched.front().t_begin != t) {
      throw NumericalError("control interval " + std::to_string(interval) + " does not start at t = " + std::to_string(t));
    }
    // Clip to the horizon.
    while (!sched.empty() && sched.back().t_begin >= cfg.horizon - eps) sched.pop_back();
    if (sched.back().t_end > cfg.horizon) sched.back().t_end = cfg.horizon;

    try {
      for (std::size_t i = 0; i < n; ++i) {
        if (cfg.kind == SimKind::deterministic) {
          det_state[i] = simulate_full(det_state[i], sched, cfg.params, cfg.diffusion, cfg.integrator, traj[i]);
        } else {
          auto& tr = traj[i];
          const double omega = cfg.omega;
          ssa_run(net, cells[i], sched, kinetics, cfg.ssa, [&tr, omega](const SsaSample& s) {
            tr.append({s.t, counts_to_state(s.counts, s.inside, omega), s.segment->u, s.segment->duty});
          });
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError("control interval " + std::to_string(interval) + ": " + e.what());
    }
    t = sched.back().t_end;
    hook.observe(t, traj);
    ++interval;
  }
  return traj;
}

}  // namespace toggle
