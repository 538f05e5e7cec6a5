// Acceptance checks. With no argument every criterion runs; with a number
// only that one. One PASS/FAIL line per criterion; exit status 1 on any FAIL.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "toggle/config.hpp"
#include "toggle/controllers.hpp"
#include "toggle/equilibria.hpp"
#include "toggle/experiment.hpp"
#include "toggle/simulate.hpp"
#include "toggle/ssa.hpp"

using namespace toggle;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const ModelParams kP;

ExperimentConfig preset(const std::string& name) { return load_config(std::string(TOGGLE_PRESET_DIR) + "/" + name + ".cfg"); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Outcome scaling() {
  const ReducedState x = to_reduced(750.0, 300.0, kP);
  const bool ok = std::abs(x.x1 - 23.4821) <= 1e-3 && std::abs(x.x2 - 10.0002) <= 1e-3;
  return {ok, fmt::format("(750, 300) -> ({:.5f}, {:.5f}), expected (23.4821, 10.0002) +-1e-3", x.x1, x.x2)};
}

Outcome reduced_parameters() {
  const ReducedParams rp = reduce_params(kP);
  const double worst = std::max({rel(rp.k1_0, oracle::k1_0()), rel(rp.k1, oracle::k1()), rel(rp.k2_0, oracle::k2_0()),
                                 rel(rp.k2, oracle::k2())});
  return {worst <= 1e-6, fmt::format("k1_0={:.4f} k1={:.2f} k2_0={:.3f} k2={:.2f}, worst relative deviation {:.1e} (tol 1e-6)",
                                     rp.k1_0, rp.k1, rp.k2_0, rp.k2, worst)};
}

Outcome bistability() {
  const ReducedParams rp = reduce_params(kP);
  const AvgModelInputs unforced{1.0, 1.0, 1.0, 0.5};
  const auto eqs = all_equilibria(unforced, rp);
  const auto ref = oracle::equilibria(1.0, 1.0, 0.5);
  bool ok = eqs.size() == 3 && ref.size() == 3;
  std::string sig;
  for (std::size_t i = 0; ok && i < 3; ++i) {
    const bool st = stability(eqs[i], unforced, rp).stable;
    ok = ok && st == ref[i].stable && rel(eqs[i].x1, ref[i].x[0]) < 1e-8 && rel(eqs[i].x2, ref[i].x[1]) < 1e-8;
    sig += st ? "stable " : "saddle ";
  }
  ok = ok && sig == "stable saddle stable ";
  return {ok, fmt::format("{} equilibria, signature {}(oracle finds {})", eqs.size(), sig, ref.size())};
}

Outcome inversion() {
  const auto t0 = std::chrono::steady_clock::now();
  const CurveDatabase db = build_database(kP);
  const PipwmController c = PipwmController::init(to_reduced(750.0, 300.0, kP), db);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const ReducedState r = c.reference();
  const bool ok = rel(r.x1, 23.11) <= 0.02 && rel(r.x2, 8.7173) <= 0.02 && secs < 10.0;
  return {ok, fmt::format("curve {} ({}, {}) D_ref={:.4f}, projection ({:.4f}, {:.4f}) vs (23.1100, 8.7173): "
                          "deviation {:.1f}% / {:.1f}% (tol 2%), {:.1f} s",
                          c.curve_id(), c.amplitudes().atc, c.amplitudes().iptg, c.duty_ref(), r.x1, r.x2,
                          100 * rel(r.x1, 23.11), 100 * rel(r.x2, 8.7173), secs)};
}

Outcome averaging() {
  const ReducedParams rp = reduce_params(kP);
  struct Case {
    double ua, ui, d;
  };
  bool ok = true;
  std::string detail;
  for (const Case cs : {Case{50.0, 0.5, 0.3}, Case{35.0, 0.35, 0.5}}) {
    for (double T : {100.0, 240.0}) {
      const PulseWaveSpec spec{cs.ua, cs.ui, T, cs.d};
      const AvgModelInputs a = AvgModelInputs::from_pulse(spec, kP);
      const auto eqs = all_equilibria(a, rp);
      // The reference is the averaged-model equilibrium refined by Newton.
      const ReducedState eq = find_equilibrium(a, rp, eqs.front());
      const int periods = static_cast<int>(std::ceil(6000.0 / T));
      std::vector<InputSegment> sched;
      for (int k = 0; k < periods; ++k)
        for (auto& s : pwm_period_schedule(k * T, spec)) sched.push_back(s);
      Trajectory<ReducedState> tr;
      simulate_qss({20.675, 2.111}, sched, kP, IntegratorOptions{}, tr);
      const ReducedState avg = period_average(tr, periods - 1, T);
      const double e1 = rel(avg.x1, eq.x1);
      const double e2 = rel(avg.x2, eq.x2);
      const bool pass = eqs.size() == 1 && e1 <= 0.15 && e2 <= 0.15;
      ok = ok && pass;
      detail += fmt::format("[({}, {}, {}) T={}: {:.1f}%/{:.1f}%{}] ", cs.ua, cs.ui, cs.d, T, 100 * e1, 100 * e2,
                            pass ? "" : " FAIL");
    }
  }
  return {ok, detail + "(tol 15%)"};
}

struct Run {
  ExperimentResult r;
  double duty_ref = std::nan("");
};

Run run_preset(const std::string& name) {
  const ExperimentConfig cfg = preset(name);
  Run out{run_experiment(cfg)};
  for (const auto& [k, v] : out.r.metrics.extra)
    if (k == "pipwm.duty_ref") out.duty_ref = v;
  return out;
}

double period_averaged(const ExperimentResult& r, bool laci) {
  // mean of the period averages over the full periods of the final window
  const auto& m = r.metrics;
  const auto& cell = r.cells.front();
  const double T = 240.0;
  double acc = 0.0;
  int n = 0;
  for (double a = std::ceil(m.window_start / T) * T; a + T <= m.window_end + 1e-9; a += T, ++n) {
    const FullState s = window_average(cell, a, a + T);
    acc += laci ? s.laci : s.tetr;
  }
  return acc / n;
}

Outcome pipwm_closed_loop() {
  const Run b = run_preset("fig6b");
  const double laci = period_averaged(b.r, true);
  const double tetr = period_averaged(b.r, false);
  double max_dev = 0.0;
  for (const auto& row : b.r.log) max_dev = std::max(max_dev, std::abs(row.duty - b.duty_ref));
  const bool ok = rel(laci, 750.0) <= 0.2 && rel(tetr, 300.0) <= 0.3 && max_dev > 1e-6;
  return {ok, fmt::format("last-24h period-averaged LacI {:.1f} ({:+.1f}%, tol 20%), TetR {:.1f} ({:+.1f}%, tol 30%), "
                          "max |D_k - D_ref| = {:.3f}",
                          laci, 100 * (laci - 750) / 750, tetr, 100 * (tetr - 300) / 300, max_dev)};
}

Outcome feedforward_insufficiency() {
  const Run a = run_preset("fig6a");
  const Run b = run_preset("fig6b");
  const double ea = a.r.metrics.laci_error;
  const double eb = b.r.metrics.laci_error;
  return {ea >= 1.5 * eb, fmt::format("LacI regulation error: feedforward {:.3f}, PI-PWM {:.3f}, ratio {:.2f} (need >= 1.5)",
                                      ea, eb, ea / eb)};
}

Outcome zad_no_diffusion() {
  const Run z = run_preset("fig8a");
  const auto& m = z.r.metrics;
  const bool ok = m.laci_error <= 0.1 && m.sigma_ratio < 0.05;
  return {ok, fmt::format("last-24h mean LacI {:.1f} (error {:.1f}%, tol 10%), final-6-period mean |int sigma| / "
                          "(T max|sigma|) = {:.3f} (need < 0.05)",
                          m.target_laci.mean, 100 * m.laci_error, m.sigma_ratio)};
}

Outcome zad_diffusion() {
  const Run a = run_preset("fig8a");
  const Run c = run_preset("fig8c");
  const double ea = a.r.metrics.laci_error;
  const double ec = c.r.metrics.laci_error;
  return {ec >= 2.0 * ea, fmt::format("LacI regulation error: dynamic diffusion {:.3f}, instantaneous {:.3f}, ratio {:.2f} "
                                      "(need >= 2)",
                                      ec, ea, ec / ea)};
}

Outcome ssa_oracle() {
  // Linear birth-death: stationary mean k/g.
  ReactionNetwork bd;
  bd.species = {"X"};
  bd.reactions = {"birth", "death"};
  bd.stoichiometry = {{+1}, {-1}};
  const double k = 20.0, g = 0.2;
  bd.propensities = [k, g](std::span<const std::int64_t> n, Inputs, std::span<double> a) {
    a[0] = k;
    a[1] = g * static_cast<double>(n[0]);
  };
  SsaCell cell{0, {0}, {}, cell_rng(2024, 0)};
  const std::vector<InputSegment> warmup{{0.0, 100.0, {}}};
  ssa_run(bd, cell, warmup, InducerKinetics{}, SsaOptions{}, nullptr);
  const std::vector<InputSegment> sched{{100.0, 100.0 + 2e4, {}}};
  const SsaStats st = ssa_run(bd, cell, sched, InducerKinetics{}, SsaOptions{}, nullptr);
  const double mean = st.count_time_integral[0] / st.duration;
  const bool bd_ok = st.events >= 100000 && rel(mean, k / g) <= 0.02;

  // Toggle switch, Omega = 1000, 200 runs, saturating aTc from the unforced high-LacI state.
  const double omega = 1000.0;
  const int runs = 200;
  const double horizon = 20.0;
  const double settle = 10.0;
  const Inputs u{100.0, 0.0};
  const std::vector<InputSegment> toggle_sched{{0.0, horizon, u, 1.0}};
  ExperimentConfig base;
  const FullState x0 = initial_state(base);
  Trajectory<FullState> det;
  simulate_full(x0, toggle_sched, kP, DiffusionMode::dynamic, IntegratorOptions{}, det);

  const ReactionNetwork net = build_network(kP, omega);
  const auto kin = InducerKinetics::from(kP, DiffusionMode::dynamic);
  const std::size_t n_out = static_cast<std::size_t>(horizon) + 1;
  std::vector<double> laci(n_out, 0.0), tetr(n_out, 0.0);
  for (int r = 0; r < runs; ++r) {
    SsaCell c{r, state_to_counts(x0, omega), {x0.atc, x0.iptg}, cell_rng(99, r)};
    ssa_run(net, c, toggle_sched, kin, SsaOptions{}, [&](const SsaSample& s) {
      const auto i = static_cast<std::size_t>(std::lround(s.t));
      laci[i] += static_cast<double>(s.counts[2]) / omega / runs;
      tetr[i] += static_cast<double>(s.counts[3]) / omega / runs;
    });
  }
  double worst = 0.0;
  for (std::size_t i = static_cast<std::size_t>(settle); i < n_out; ++i) {
    const FullState d = state_at(det, static_cast<double>(i));
    worst = std::max({worst, rel(laci[i], d.laci), rel(tetr[i], d.tetr)});
  }
  const bool toggle_ok = worst <= 0.05;
  return {bd_ok && toggle_ok,
          fmt::format("birth-death mean {:.2f} vs k/g = {:.0f} over {} events (tol 2%); toggle ensemble ({} runs, "
                      "Omega {}) worst deviation from the deterministic trajectory on [{}, {}] min: {:.2f}% (tol 5%)",
                      mean, k / g, st.events, runs, omega, settle, horizon, 100 * worst)};
}

Outcome coherence() {
  const Run pi = run_preset("fig3a");
  const Run pw = run_preset("fig6c");
  const double sd_pi = pi.r.metrics.population_laci.sd;
  const double sd_pw = pw.r.metrics.nontarget_laci_sd;
  return {sd_pi >= 2.0 * sd_pw, fmt::format("final-window LacI population sd: population PI {:.1f} (16 cells), PI-PWM "
                                            "non-target {:.1f} (16 cells), ratio {:.2f} (need >= 2)",
                                            sd_pi, sd_pw, sd_pi / sd_pw)};
}

Outcome determinism() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"fig3a", "fig3b", "fig6a", "fig6b", "fig6c", "fig8a", "fig8b", "fig8c"}) {
    const ExperimentConfig cfg = preset(name);
    std::ostringstream a, b;
    write_trajectories_csv(a, run_experiment(cfg).cells);
    write_trajectories_csv(b, run_experiment(cfg).cells);
    const bool same = a.str() == b.str();
    ok = ok && same;
    detail += fmt::format("{}:{} ", name, same ? "identical" : "DIFFERENT");
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      scaling,           reduced_parameters,        bistability,      inversion,      averaging,  pipwm_closed_loop,
      feedforward_insufficiency, zad_no_diffusion, zad_diffusion, ssa_oracle, coherence, determinism};
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(criteria.size())) {
      std::cerr << "criterion must be 1.." << criteria.size() << "\n";
      return 2;
    }
  }
  bool all = true;
  for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
    if (only && i != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << fmt::format("criterion {:>2}: {} | {} [{:.1f} s]\n", i, o.pass ? "PASS" : "FAIL", o.detail, secs);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
