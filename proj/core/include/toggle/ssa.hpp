#pragma once

// Gillespie direct-method SSA with deterministic, time-varying modulators
// (intracellular inducers). Inducer-dependent propensities are refreshed on a
// bounded grid inside every input segment.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "toggle/model.hpp"
#include "toggle/trajectory.hpp"

namespace toggle {

using Rng = std::mt19937_64;
using Counts = std::vector<std::int64_t>;

/// Uniform variate in (0, 1) built from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform_open01(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

/// Per-cell stream derived from (master seed, cell id) through std::seed_seq.
Rng cell_rng(std::uint64_t master_seed, int cell_id);

struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<std::string> reactions;
  /// stoichiometry[r][s]: change of species s when reaction r fires
  std::vector<std::vector<int>> stoichiometry;
  /// Writes all propensities for the given copy numbers and intracellular inducers.
  std::function<void(std::span<const std::int64_t>, Inputs, std::span<double>)> propensities;
  double omega = 1.0;

  std::size_t num_species() const { return species.size(); }
  std::size_t num_reactions() const { return reactions.size(); }
};

/// The eight-reaction toggle switch: per gene transcription, mRNA decay,
/// translation and protein decay. Species order: mRNA_LacI, mRNA_TetR, LacI, TetR.
ReactionNetwork build_network(const ModelParams& p, double omega);

/// Exact evolution of the intracellular inducers under constant medium input.
struct InducerKinetics {
  DiffusionMode mode = DiffusionMode::dynamic;
  double k_in_atc = 0.0;
  double k_out_atc = 0.0;
  double k_in_iptg = 0.0;
  double k_out_iptg = 0.0;

  static InducerKinetics from(const ModelParams& p, DiffusionMode mode);
  /// Inside levels after `dt` minutes with the medium held at `medium`.
  Inputs advance(Inputs inside, Inputs medium, double dt) const;
};

struct SsaOptions {
  double refresh = 1.0;    // maximum interval between inducer refreshes (min)
  double output_dt = 1.0;  // sampling grid, anchored at t = 0
};

struct SsaCell {
  int id = 0;
  Counts counts;
  Inputs inside;  // intracellular inducers
  Rng rng;
};

struct SsaStats {
  std::uint64_t events = 0;
  std::vector<double> count_time_integral;  // per species, exact integral of n(t) dt
  double duration = 0.0;
};

struct SsaSample {
  double t;
  std::span<const std::int64_t> counts;
  Inputs inside;
  const InputSegment* segment;
};

/// Runs the cell through every segment of the schedule. `observer` receives
/// a sample at each segment start, at every output grid point strictly inside
/// a segment and, if `emit_final`, at the end of the schedule.
SsaStats ssa_run(const ReactionNetwork& net, SsaCell& cell, std::span<const InputSegment> schedule,
                 const InducerKinetics& kinetics, const SsaOptions& opt,
                 const std::function<void(const SsaSample&)>& observer, bool emit_final = true);

/// Counts to concentrations (divide by omega) plus inducer levels.
FullState counts_to_state(std::span<const std::int64_t> counts, Inputs inside, double omega);
Counts state_to_counts(const FullState& s, double omega);

}  // namespace toggle
