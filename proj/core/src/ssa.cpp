#include "toggle/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "toggle/errors.hpp"

namespace toggle {
namespace {

inline double hill_pow(double x, double n) { return n == 2.0 ? x * x : std::pow(x, n); }

[[noreturn]] void propensity_failure(const ReactionNetwork& net, std::span<const std::int64_t> counts,
                                     std::span<const double> props, double t) {
  std::ostringstream os;
  os << "ssa: invalid propensity at t = " << t << " min; state {";
  for (std::size_t i = 0; i < counts.size(); ++i) os << (i ? ", " : "") << net.species[i] << "=" << counts[i];
  os << "} propensities {";
  for (std::size_t r = 0; r < props.size(); ++r) os << (r ? ", " : "") << net.reactions[r] << "=" << props[r];
  os << "}";
  throw NumericalError(os.str());
}

}  // namespace

Rng cell_rng(std::uint64_t master_seed, int cell_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(cell_id), 0x9e3779b9u};
  return Rng(seq);
}

ReactionNetwork build_network(const ModelParams& p, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("omega", "must be > 0");
  p.validate();

  ReactionNetwork net;
  net.omega = omega;
  net.species = {"mRNA_LacI", "mRNA_TetR", "LacI", "TetR"};
  net.reactions = {"transcription_LacI", "transcription_TetR", "decay_mRNA_LacI", "decay_mRNA_TetR",
                   "translation_LacI",   "translation_TetR",   "decay_LacI",      "decay_TetR"};
  net.stoichiometry = {
      {+1, 0, 0, 0}, {0, +1, 0, 0}, {-1, 0, 0, 0}, {0, -1, 0, 0},
      {0, 0, +1, 0}, {0, 0, 0, +1}, {0, 0, -1, 0}, {0, 0, 0, -1},
  };
  net.propensities = [p, omega](std::span<const std::int64_t> n, Inputs in, std::span<double> a) {
    const double tetr = static_cast<double>(n[3]) / omega;
    const double laci = static_cast<double>(n[2]) / omega;
    const double free_tetr = tetr / p.theta_TetR / (1.0 + hill_pow(in.atc / p.theta_aTc, p.eta_aTc));
    const double free_laci = laci / p.theta_LacI / (1.0 + hill_pow(in.iptg / p.theta_IPTG, p.eta_IPTG));
    a[0] = omega * (p.k_m0_L + p.k_m_L / (1.0 + hill_pow(free_tetr, p.eta_TetR)));
    a[1] = omega * (p.k_m0_T + p.k_m_T / (1.0 + hill_pow(free_laci, p.eta_LacI)));
    a[2] = p.g_m_L * static_cast<double>(n[0]);
    a[3] = p.g_m_T * static_cast<double>(n[1]);
    a[4] = p.k_p_L * static_cast<double>(n[0]);
    a[5] = p.k_p_T * static_cast<double>(n[1]);
    a[6] = p.g_p_L * static_cast<double>(n[2]);
    a[7] = p.g_p_T * static_cast<double>(n[3]);
  };
  return net;
}

InducerKinetics InducerKinetics::from(const ModelParams& p, DiffusionMode mode) {
  return {mode, p.k_in_aTc, p.k_out_aTc, p.k_in_IPTG, p.k_out_IPTG};
}

Inputs InducerKinetics::advance(Inputs inside, Inputs medium, double dt) const {
  if (mode == DiffusionMode::instantaneous) return medium;
  // Relaxation is monotone toward the medium level, so the branch chosen at
  // the start holds for the whole interval.
  auto relax = [dt](double x, double u, double k_in, double k_out) {
    const double k = u > x ? k_in : k_out;
    return u + (x - u) * std::exp(-k * dt);
  };
  return {relax(inside.atc, medium.atc, k_in_atc, k_out_atc), relax(inside.iptg, medium.iptg, k_in_iptg, k_out_iptg)};
}

SsaStats ssa_run(const ReactionNetwork& net, SsaCell& cell, std::span<const InputSegment> schedule,
                 const InducerKinetics& kinetics, const SsaOptions& opt,
                 const std::function<void(const SsaSample&)>& observer, bool emit_final) {
  validate_schedule(schedule);
  if (!(opt.refresh > 0.0)) throw ValidationError("refresh", "must be > 0");
  if (!(opt.output_dt > 0.0)) throw ValidationError("output_dt", "must be > 0");
  if (cell.counts.size() != net.num_species()) throw ValidationError("counts", "size does not match network species");

  const std::size_t nr = net.num_reactions();
  const std::size_t ns = net.num_species();
  std::vector<double> props(nr);
  SsaStats stats;
  stats.count_time_integral.assign(ns, 0.0);

  auto integrate_counts = [&](double dt) {
    for (std::size_t s = 0; s < ns; ++s) stats.count_time_integral[s] += static_cast<double>(cell.counts[s]) * dt;
  };

  for (const InputSegment& seg : schedule) {
    if (kinetics.mode == DiffusionMode::instantaneous) cell.inside = seg.u;
    if (observer) observer({seg.t_begin, cell.counts, cell.inside, &seg});

    double sample_idx = std::floor(seg.t_begin / opt.output_dt) + 1.0;
    double next_sample = sample_idx * opt.output_dt;

    double t = seg.t_begin;
    while (t < seg.t_end) {
      const double sub_end = std::min(seg.t_end, t + opt.refresh);
      const Inputs inside_start = cell.inside;
      // Midpoint inducer level over the refresh interval.
      const Inputs modulator = kinetics.advance(inside_start, seg.u, 0.5 * (sub_end - t));
      const double sub_begin = t;

      // Samples inside this refresh interval report the exact inducer level.
      auto emit_in_sub = [&](double t_now) {
        while (next_sample <= t_now && next_sample < seg.t_end - 1e-9 * opt.output_dt) {
          if (observer) {
            const Inputs inside_at = kinetics.advance(inside_start, seg.u, next_sample - sub_begin);
            observer({next_sample, cell.counts, inside_at, &seg});
          }
          sample_idx += 1.0;
          next_sample = sample_idx * opt.output_dt;
        }
      };

      while (true) {
        net.propensities(cell.counts, modulator, props);
        double a0 = 0.0;
        for (double a : props) {
          if (!(a >= 0.0) || !std::isfinite(a)) propensity_failure(net, cell.counts, props, t);
          a0 += a;
        }
        if (!std::isfinite(a0)) propensity_failure(net, cell.counts, props, t);

        const double tau = a0 > 0.0 ? -std::log(uniform_open01(cell.rng)) / a0 : std::numeric_limits<double>::infinity();
        if (t + tau >= sub_end) {
          emit_in_sub(sub_end);
          integrate_counts(sub_end - t);
          t = sub_end;
          break;
        }
        const double t_fire = t + tau;
        emit_in_sub(t_fire);
        integrate_counts(tau);
        t = t_fire;

        const double target = uniform_open01(cell.rng) * a0;
        double cum = 0.0;
        std::size_t r = 0;
        for (; r + 1 < nr; ++r) {
          cum += props[r];
          if (target < cum) break;
        }
        while (props[r] <= 0.0 && r > 0) --r;  // guard against round-off landing on a zero channel
        const auto& change = net.stoichiometry[r];
        for (std::size_t s = 0; s < ns; ++s) cell.counts[s] += change[s];
        ++stats.events;
      }
      cell.inside = kinetics.advance(inside_start, seg.u, sub_end - sub_begin);
    }
    stats.duration += seg.t_end - seg.t_begin;
  }

  if (emit_final && !schedule.empty() && observer) {
    observer({schedule.back().t_end, cell.counts, cell.inside, &schedule.back()});
  }
  return stats;
}

FullState counts_to_state(std::span<const std::int64_t> counts, Inputs inside, double omega) {
  FullState s;
  s.mrna_laci = static_cast<double>(counts[0]) / omega;
  s.mrna_tetr = static_cast<double>(counts[1]) / omega;
  s.laci = static_cast<double>(counts[2]) / omega;
  s.tetr = static_cast<double>(counts[3]) / omega;
  s.atc = inside.atc;
  s.iptg = inside.iptg;
  return s;
}

Counts state_to_counts(const FullState& s, double omega) {
  auto round = [omega](double c) { return static_cast<std::int64_t>(std::llround(std::max(0.0, c) * omega)); };
  return {round(s.mrna_laci), round(s.mrna_tetr), round(s.laci), round(s.tetr)};
}

}  // namespace toggle
