#include "toggle/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include "toggle/errors.hpp"

namespace toggle {
namespace {

namespace pt = boost::property_tree;

template <class E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<ControllerKind> kControllers[] = {
    {ControllerKind::none, "none"},
    {ControllerKind::pi_population, "pi-population"},
    {ControllerKind::pi_population_pwm, "pi-population-pwm"},
    {ControllerKind::pipwm, "pipwm"},
    {ControllerKind::zad, "zad"},
    {ControllerKind::feedforward, "feedforward"},
};
constexpr EnumName<SimKind> kKinds[] = {{SimKind::deterministic, "deterministic"}, {SimKind::ssa, "ssa"}};
constexpr EnumName<DiffusionMode> kDiffusion[] = {{DiffusionMode::dynamic, "dynamic"},
                                                  {DiffusionMode::instantaneous, "instantaneous"}};
constexpr EnumName<InitialCondition> kInitial[] = {{InitialCondition::high_laci, "high_laci"},
                                                   {InitialCondition::low_laci, "low_laci"}};
constexpr EnumName<Measurement> kMeasure[] = {{Measurement::target, "target"}, {Measurement::mean, "mean"}};
constexpr EnumName<AmplitudeSelection> kSelect[] = {{AmplitudeSelection::automatic, "auto"},
                                                    {AmplitudeSelection::fixed, "fixed"}};

template <class E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const std::string& key, const std::string& text) {
  std::string options;
  for (const auto& e : table) {
    if (e.name == text) return e.value;
    options += (options.empty() ? "" : "|") + std::string(e.name);
  }
  throw ValidationError(key, "expected one of " + options + ", got '" + text + "'");
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ValidationError(key, "expected a number, got '" + text + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ValidationError(key, "expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError(key, "expected true|false, got '" + text + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& text)>;

Setter number(double ExperimentConfig::*m) {
  return [m](ExperimentConfig& c, const std::string& k, const std::string& t) { c.*m = parse_double(k, t); };
}

std::map<std::string, Setter> setters() {
  std::map<std::string, Setter> s;
  // [model] params is applied first by parse_config; individual fields override it.
  for (const auto& [name, member] : ModelParams::fields()) {
    s["model." + std::string(name)] = [member](ExperimentConfig& c, const std::string& k, const std::string& t) {
      c.params.*member = parse_double(k, t);
    };
  }
  s["sim.kind"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) { c.kind = parse_enum(kKinds, k, t); };
  s["sim.diffusion"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.diffusion = parse_enum(kDiffusion, k, t);
  };
  s["sim.horizon"] = number(&ExperimentConfig::horizon_h);
  s["sim.n_cells"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    const long long v = parse_integer(k, t);
    if (v < 1 || v > 1000000) throw ValidationError(k, "must be in [1, 1000000]");
    c.n_cells = static_cast<int>(v);
  };
  s["sim.seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw ValidationError(k, "expected a nonnegative integer, got '" + t + "'");
    }
    try {
      c.seed = std::stoull(t);
    } catch (const std::exception&) {
      throw ValidationError(k, "out of range");
    }
  };
  s["sim.omega"] = number(&ExperimentConfig::omega);
  s["sim.tol"] = number(&ExperimentConfig::tol);
  s["sim.refresh_min"] = number(&ExperimentConfig::refresh_min);
  s["sim.output_dt_min"] = number(&ExperimentConfig::output_dt_min);
  s["sim.initial"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.initial = parse_enum(kInitial, k, t);
  };
  s["control.controller"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.controller = parse_enum(kControllers, k, t);
  };
  s["control.laci_ref"] = number(&ExperimentConfig::laci_ref);
  s["control.tetr_ref"] = number(&ExperimentConfig::tetr_ref);
  s["control.target_cell"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    const long long v = parse_integer(k, t);
    if (v < 0 || v > 1000000) throw ValidationError(k, "must be in [0, 1000000]");
    c.target_cell = static_cast<int>(v);
  };
  s["control.measure"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.measure = parse_enum(kMeasure, k, t);
  };
  s["control.anti_windup"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.anti_windup = parse_bool(k, t);
  };
  s["control.select_amplitudes"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.select_amplitudes = parse_enum(kSelect, k, t);
  };
  s["pulse.amp_atc"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pulse.amp_atc = parse_double(k, t);
  };
  s["pulse.amp_iptg"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pulse.amp_iptg = parse_double(k, t);
  };
  s["pulse.period"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pulse.period = parse_double(k, t);
  };
  s["pulse.duty"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pulse.duty = parse_double(k, t);
  };
  s["pi.kp_laci"] = number(&ExperimentConfig::kp_laci);
  s["pi.ki_laci"] = number(&ExperimentConfig::ki_laci);
  s["pi.kp_tetr"] = number(&ExperimentConfig::kp_tetr);
  s["pi.ki_tetr"] = number(&ExperimentConfig::ki_tetr);
  s["pi.sample_min"] = number(&ExperimentConfig::pi_sample_min);
  s["pipwm.kp"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pipwm.kp = parse_double(k, t);
  };
  s["pipwm.ki"] = [](ExperimentConfig& c, const std::string& k, const std::string& t) {
    c.pipwm.ki = parse_double(k, t);
  };
  s["output.window"] = number(&ExperimentConfig::window_h);
  return s;
}

// Re-keys an error raised by a nested validator under its config key.
[[noreturn]] void rekey(const ValidationError& e, const std::string& key) {
  std::string what = e.what();
  const std::string prefix = e.key() + ": ";
  if (what.starts_with(prefix)) what.erase(0, prefix.size());
  throw ValidationError(key, what);
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ValidationError(key, what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string_view to_string(ControllerKind k) { return name_of(kControllers, k); }
std::string_view to_string(SimKind k) { return name_of(kKinds, k); }
std::string_view to_string(DiffusionMode m) { return name_of(kDiffusion, m); }

void ExperimentConfig::validate() const {
  try {
    params.validate();
  } catch (const ValidationError& e) {
    rekey(e, "model." + e.key());
  }
  require(finite_positive(horizon_h), "sim.horizon", "must be > 0 (hours)");
  require(n_cells >= 1, "sim.n_cells", "must be >= 1");
  require(kind == SimKind::ssa || n_cells == 1, "sim.n_cells", "deterministic runs simulate a single cell");
  require(finite_positive(omega), "sim.omega", "must be > 0");
  require(finite_positive(tol) && tol < 1.0, "sim.tol", "must be in (0, 1)");
  require(finite_positive(refresh_min), "sim.refresh_min", "must be > 0");
  require(finite_positive(output_dt_min), "sim.output_dt_min", "must be > 0");
  require(std::isfinite(laci_ref) && laci_ref >= 0.0, "control.laci_ref", "must be >= 0");
  require(std::isfinite(tetr_ref) && tetr_ref >= 0.0, "control.tetr_ref", "must be >= 0");
  require(target_cell < n_cells, "control.target_cell", "must be < sim.n_cells");
  require(std::isfinite(pulse.amp_atc) && pulse.amp_atc >= 0.0, "pulse.amp_atc", "must be >= 0");
  require(std::isfinite(pulse.amp_iptg) && pulse.amp_iptg >= 0.0, "pulse.amp_iptg", "must be >= 0");
  require(finite_positive(pulse.period), "pulse.period", "must be > 0");
  require(pulse.duty >= 0.0 && pulse.duty <= 1.0, "pulse.duty", "must be in [0, 1]");
  require(std::isfinite(kp_laci), "pi.kp_laci", "must be finite");
  require(std::isfinite(ki_laci), "pi.ki_laci", "must be finite");
  require(std::isfinite(kp_tetr), "pi.kp_tetr", "must be finite");
  require(std::isfinite(ki_tetr), "pi.ki_tetr", "must be finite");
  require(finite_positive(pi_sample_min), "pi.sample_min", "must be > 0");
  require(std::isfinite(pipwm.kp), "pipwm.kp", "must be finite");
  require(std::isfinite(pipwm.ki), "pipwm.ki", "must be finite");
  require(finite_positive(window_h), "output.window", "must be > 0 (hours)");
}

ExperimentConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config", fmt::format("line {}: {}", e.line(), e.message()));
  }

  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ValidationError(section, "key outside of a section");
  }
  if (auto model = tree.get_child_optional("model")) {
    if (auto name = model->get_optional<std::string>("params")) {
      try {
        cfg.params = ModelParams::named(*name);
      } catch (const ValidationError& e) {
        rekey(e, "model.params");
      }
      cfg.param_set = *name;
    }
  }

  static const std::map<std::string, Setter> table = setters();
  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      if (full == "model.params") continue;
      auto it = table.find(full);
      if (it == table.end()) throw ValidationError(full, "unknown configuration key");
      it->second(cfg, full, node.data());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  os << "[model]\n";
  os << "params = " << c.param_set << "\n";
  for (const auto& [name, member] : ModelParams::fields()) os << name << " = " << num(c.params.*member) << "\n";
  os << "\n[sim]\n";
  os << "kind = " << to_string(c.kind) << "\n";
  os << "diffusion = " << to_string(c.diffusion) << "\n";
  os << "horizon = " << num(c.horizon_h) << "\n";
  os << "n_cells = " << c.n_cells << "\n";
  os << "seed = " << c.seed << "\n";
  os << "omega = " << num(c.omega) << "\n";
  os << "tol = " << num(c.tol) << "\n";
  os << "refresh_min = " << num(c.refresh_min) << "\n";
  os << "output_dt_min = " << num(c.output_dt_min) << "\n";
  os << "initial = " << name_of(kInitial, c.initial) << "\n";
  os << "\n[control]\n";
  os << "controller = " << to_string(c.controller) << "\n";
  os << "laci_ref = " << num(c.laci_ref) << "\n";
  os << "tetr_ref = " << num(c.tetr_ref) << "\n";
  os << "target_cell = " << c.target_cell << "\n";
  os << "measure = " << name_of(kMeasure, c.measure) << "\n";
  os << "anti_windup = " << (c.anti_windup ? "true" : "false") << "\n";
  os << "select_amplitudes = " << name_of(kSelect, c.select_amplitudes) << "\n";
  os << "\n[pulse]\n";
  os << "amp_atc = " << num(c.pulse.amp_atc) << "\n";
  os << "amp_iptg = " << num(c.pulse.amp_iptg) << "\n";
  os << "period = " << num(c.pulse.period) << "\n";
  os << "duty = " << num(c.pulse.duty) << "\n";
  os << "\n[pi]\n";
  os << "kp_laci = " << num(c.kp_laci) << "\n";
  os << "ki_laci = " << num(c.ki_laci) << "\n";
  os << "kp_tetr = " << num(c.kp_tetr) << "\n";
  os << "ki_tetr = " << num(c.ki_tetr) << "\n";
  os << "sample_min = " << num(c.pi_sample_min) << "\n";
  os << "\n[pipwm]\n";
  os << "kp = " << num(c.pipwm.kp) << "\n";
  os << "ki = " << num(c.pipwm.ki) << "\n";
  os << "\n[output]\n";
  os << "window = " << num(c.window_h) << "\n";
}

}  // namespace toggle
