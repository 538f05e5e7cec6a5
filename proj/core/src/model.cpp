#include "toggle/model.hpp"

#include <cmath>
#include <string>

#include "toggle/errors.hpp"

namespace toggle {
namespace {

// x^n with the common integer exponent taken exactly.
inline double hill_pow(double x, double n) {
  if (n == 2.0) return x * x;
  if (n == 1.0) return x;
  return std::pow(x, n);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(what, "non-finite value");
}

double diffusion_rate(double medium, double inside, double k_in, double k_out) {
  // Influx only when the medium is strictly richer; equality takes the efflux branch.
  return (medium > inside ? k_in : k_out) * (medium - inside);
}

// Transcription of one gene given repressor level and the inducer that sequesters it.
double transcription(double basal, double regulated, double repressor, double theta_rep, double eta_rep,
                     double inducer, double theta_ind, double eta_ind) {
  const double free_fraction = 1.0 / (1.0 + hill_pow(inducer / theta_ind, eta_ind));
  return basal + regulated / (1.0 + hill_pow(repressor / theta_rep * free_fraction, eta_rep));
}

}  // namespace

const std::array<ModelParams::Field, 24>& ModelParams::fields() {
  static const std::array<Field, 24> table{{
      {"k_m0_L", &ModelParams::k_m0_L},         {"k_m0_T", &ModelParams::k_m0_T},
      {"k_m_L", &ModelParams::k_m_L},           {"k_m_T", &ModelParams::k_m_T},
      {"k_p_L", &ModelParams::k_p_L},           {"k_p_T", &ModelParams::k_p_T},
      {"g_m_L", &ModelParams::g_m_L},           {"g_m_T", &ModelParams::g_m_T},
      {"g_p_L", &ModelParams::g_p_L},           {"g_p_T", &ModelParams::g_p_T},
      {"theta_LacI", &ModelParams::theta_LacI}, {"theta_TetR", &ModelParams::theta_TetR},
      {"theta_aTc", &ModelParams::theta_aTc},   {"theta_IPTG", &ModelParams::theta_IPTG},
      {"eta_LacI", &ModelParams::eta_LacI},     {"eta_TetR", &ModelParams::eta_TetR},
      {"eta_aTc", &ModelParams::eta_aTc},       {"eta_IPTG", &ModelParams::eta_IPTG},
      {"k_in_aTc", &ModelParams::k_in_aTc},     {"k_out_aTc", &ModelParams::k_out_aTc},
      {"k_in_IPTG", &ModelParams::k_in_IPTG},   {"k_out_IPTG", &ModelParams::k_out_IPTG},
      {"k_RFP", &ModelParams::k_RFP},           {"k_GFP", &ModelParams::k_GFP},
  }};
  return table;
}

void ModelParams::validate() const {
  for (const auto& [name, member] : fields()) {
    const double v = this->*member;
    const std::string key(name);
    if (!std::isfinite(v)) throw ValidationError(key, "must be finite");
    if (name.starts_with("eta_")) {
      if (v < 1.0) throw ValidationError(key, "Hill exponent must be >= 1");
    } else if (v <= 0.0) {
      throw ValidationError(key, "must be strictly positive");
    }
  }
}

ModelParams ModelParams::named(std::string_view name) {
  if (name == "lugagne2017") return ModelParams{};
  throw ValidationError("params", "unknown parameter set '" + std::string(name) + "'");
}

bool FullState::valid() const {
  for (double v : as_array())
    if (!std::isfinite(v) || v < 0.0) return false;
  return true;
}

bool ReducedState::valid() const {
  return std::isfinite(x1) && std::isfinite(x2) && x1 >= 0.0 && x2 >= 0.0;
}

void PulseWaveSpec::validate() const {
  if (!(amp_atc >= 0.0) || !std::isfinite(amp_atc)) throw ValidationError("amp_atc", "must be >= 0");
  if (!(amp_iptg >= 0.0) || !std::isfinite(amp_iptg)) throw ValidationError("amp_iptg", "must be >= 0");
  if (!(period > 0.0) || !std::isfinite(period)) throw ValidationError("period", "must be > 0");
  if (!(duty >= 0.0 && duty <= 1.0)) throw ValidationError("duty", "must lie in [0, 1]");
}

AvgModelInputs AvgModelInputs::from_pulse(const PulseWaveSpec& spec, const ModelParams& p) {
  spec.validate();
  return {hill_w1(spec.amp_atc, p), hill_w2(spec.amp_iptg, p), spec.period * p.g_p_L, spec.duty};
}

void AvgModelInputs::validate() const {
  if (!(w1_bar > 0.0 && w1_bar <= 1.0)) throw ValidationError("w1_bar", "must lie in (0, 1]");
  if (!(w2_bar > 0.0 && w2_bar <= 1.0)) throw ValidationError("w2_bar", "must lie in (0, 1]");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon", "must be > 0");
  if (!(duty >= 0.0 && duty <= 1.0)) throw ValidationError("duty", "must lie in [0, 1]");
}

double hill_w1(double atc, const ModelParams& p) {
  if (!(atc >= 0.0)) throw ValidationError("atc", "concentration must be >= 0");
  return std::pow(1.0 + hill_pow(atc / p.theta_aTc, p.eta_aTc), -p.eta_TetR);
}

double hill_w2(double iptg, const ModelParams& p) {
  if (!(iptg >= 0.0)) throw ValidationError("iptg", "concentration must be >= 0");
  return std::pow(1.0 + hill_pow(iptg / p.theta_IPTG, p.eta_IPTG), -p.eta_LacI);
}

FullState full_rhs(const FullState& s, Inputs medium, const ModelParams& p) {
  for (double v : s.as_array()) require_finite(v, "state");
  if (!(medium.atc >= 0.0) || !(medium.iptg >= 0.0)) throw ValidationError("inputs", "medium concentration must be >= 0");

  FullState d;
  d.mrna_laci = transcription(p.k_m0_L, p.k_m_L, s.tetr, p.theta_TetR, p.eta_TetR, s.atc, p.theta_aTc, p.eta_aTc) -
                p.g_m_L * s.mrna_laci;
  d.mrna_tetr = transcription(p.k_m0_T, p.k_m_T, s.laci, p.theta_LacI, p.eta_LacI, s.iptg, p.theta_IPTG, p.eta_IPTG) -
                p.g_m_T * s.mrna_tetr;
  d.laci = p.k_p_L * s.mrna_laci - p.g_p_L * s.laci;
  d.tetr = p.k_p_T * s.mrna_tetr - p.g_p_T * s.tetr;
  d.atc = diffusion_rate(medium.atc, s.atc, p.k_in_aTc, p.k_out_aTc);
  d.iptg = diffusion_rate(medium.iptg, s.iptg, p.k_in_IPTG, p.k_out_IPTG);
  return d;
}

FullState full_rhs_instantaneous(const FullState& s, Inputs medium, const ModelParams& p) {
  FullState pinned = s;
  pinned.atc = medium.atc;
  pinned.iptg = medium.iptg;
  FullState d = full_rhs(pinned, medium, p);
  d.atc = 0.0;
  d.iptg = 0.0;
  return d;
}

ReducedParams reduce_params(const ModelParams& p) {
  p.validate();
  if (std::abs(p.g_p_L - p.g_p_T) > 1e-9) {
    throw ValidationError("g_p_T", "reduced model needs g_p_L == g_p_T");
  }
  if (p.eta_LacI != 2.0 || p.eta_TetR != 2.0) {
    throw ValidationError("eta_LacI", "reduced model needs repressor Hill exponents equal to 2");
  }
  const double gp = p.g_p_L;
  ReducedParams rp;
  rp.k1_0 = p.k_m0_L * p.k_p_L / (p.g_m_L * p.theta_LacI * gp);
  rp.k1 = p.k_m_L * p.k_p_L / (p.g_m_L * p.theta_LacI * gp);
  rp.k2_0 = p.k_m0_T * p.k_p_T / (p.g_m_T * p.theta_TetR * gp);
  rp.k2 = p.k_m_T * p.k_p_T / (p.g_m_T * p.theta_TetR * gp);
  rp.g_p = gp;
  return rp;
}

ReducedState qss_rhs(const ReducedState& x, double w1, double w2, const ReducedParams& rp) {
  require_finite(x.x1, "x1");
  require_finite(x.x2, "x2");
  require_finite(w1, "w1");
  require_finite(w2, "w2");
  return {rp.k1_0 + rp.k1 / (1.0 + x.x2 * x.x2 * w1) - x.x1,
          rp.k2_0 + rp.k2 / (1.0 + x.x1 * x.x1 * w2) - x.x2};
}

ReducedState avg_rhs(const ReducedState& x, const AvgModelInputs& a, const ReducedParams& rp) {
  require_finite(x.x1, "x1");
  require_finite(x.x2, "x2");
  const double d = a.duty;
  const double x1s = x.x1 * x.x1;
  const double x2s = x.x2 * x.x2;
  // aTc phase (weight D): TetR repression relieved, IPTG absent.
  // IPTG phase (weight 1 - D): LacI repression relieved, aTc absent.
  const double f1 = rp.k1_0 + rp.k1 * (d / (1.0 + x2s * a.w1_bar) + (1.0 - d) / (1.0 + x2s)) - x.x1;
  const double f2 = rp.k2_0 + rp.k2 * (d / (1.0 + x1s) + (1.0 - d) / (1.0 + x1s * a.w2_bar)) - x.x2;
  return {a.epsilon * f1, a.epsilon * f2};
}

Inputs pulse_inputs(double t, const PulseWaveSpec& spec) {
  // Edge expression matches pwm_period_schedule so stored samples agree bit-for-bit.
  const double start = std::floor(t / spec.period) * spec.period;
  if (t < start + spec.duty * spec.period) return {spec.amp_atc, 0.0};
  return {0.0, spec.amp_iptg};
}

std::pair<double, double> output_map(const FullState& s, const ModelParams& p) {
  return {p.k_RFP * s.laci, p.k_GFP * s.tetr};
}

ReducedState to_reduced(double laci, double tetr, const ModelParams& p) {
  return {laci / p.theta_LacI, tetr / p.theta_TetR};
}

std::pair<double, double> from_reduced(const ReducedState& x, const ModelParams& p) {
  return {x.x1 * p.theta_LacI, x.x2 * p.theta_TetR};
}

FullState lift_reduced(const ReducedState& x, Inputs intracellular, const ModelParams& p) {
  FullState s;
  s.laci = x.x1 * p.theta_LacI;
  s.tetr = x.x2 * p.theta_TetR;
  s.atc = intracellular.atc;
  s.iptg = intracellular.iptg;
  s.mrna_laci = p.g_p_L * s.laci / p.k_p_L;
  s.mrna_tetr = p.g_p_T * s.tetr / p.k_p_T;
  return s;
}

}  // namespace toggle
