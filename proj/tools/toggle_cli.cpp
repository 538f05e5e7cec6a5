// Command-line harness: simulate, curves, summarize, presets.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toggle/config.hpp"
#include "toggle/equilibria.hpp"
#include "toggle/errors.hpp"
#include "toggle/experiment.hpp"

#ifndef TOGGLE_PRESET_DIR
#define TOGGLE_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace toggle;

namespace {

fs::path preset_dir() {
  if (const char* env = std::getenv("TOGGLE_PRESETS")) return env;
  return TOGGLE_PRESET_DIR;
}

std::vector<fs::path> preset_files() {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(preset_dir(), ec)) {
    if (e.is_regular_file() && e.path().extension() == ".cfg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A config argument is a file path or the name of a preset.
fs::path resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path preset = preset_dir() / (arg + ".cfg");
  if (fs::exists(preset)) return preset;
  throw ValidationError("config", "no such file or preset '" + arg + "'");
}

std::string first_comment(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("#") || line.starts_with(";")) {
      line.erase(0, 1);
      line.erase(0, line.find_first_not_of(' '));
      return line;
    }
  }
  return "";
}

std::vector<Inputs> parse_grid_spec(const std::string& spec) {
  if (spec.empty() || spec == "default") return default_amplitude_grid();
  std::vector<Inputs> grid;
  std::stringstream ss(spec);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) throw ValidationError("grid-spec", "expected 'atc,iptg' pairs, got '" + pair + "'");
    try {
      std::size_t used_a = 0;
      std::size_t used_i = 0;
      const std::string a = pair.substr(0, comma);
      const std::string i = pair.substr(comma + 1);
      Inputs amp{std::stod(a, &used_a), std::stod(i, &used_i)};
      if (used_a != a.size() || used_i != i.size()) throw std::invalid_argument("trailing characters");
      if (!(amp.atc >= 0.0) || !(amp.iptg >= 0.0)) throw ValidationError("grid-spec", "amplitudes must be >= 0");
      grid.push_back(amp);
    } catch (const std::logic_error& e) {
      if (auto* v = dynamic_cast<const ValidationError*>(&e)) throw *v;
      throw ValidationError("grid-spec", "malformed pair '" + pair + "'");
    }
  }
  if (grid.empty()) throw ValidationError("grid-spec", "no amplitude pairs");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toggle switch simulation and control harness"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  app.add_option("--seed", seed, "Override sim.seed");
  app.add_option("--out", out, "Output directory (simulate) or file (curves)");
  app.add_flag("--force", force, "Overwrite existing outputs");

  auto* simulate = app.add_subcommand("simulate", "Run an experiment from a config file or preset name");
  std::string config_arg;
  simulate->add_option("config", config_arg, "Config path or preset name")->required();
  simulate->fallthrough();

  auto* curves = app.add_subcommand("curves", "Build the equilibrium-curve database as CSV");
  std::string grid_spec = "default";
  double period = 240.0;
  curves->add_option("--grid-spec", grid_spec, "'default' or 'atc,iptg;atc,iptg;...'");
  curves->add_option("--period", period, "Pulse period in minutes");
  curves->fallthrough();

  auto* summarize = app.add_subcommand("summarize", "Recompute metrics for an output directory");
  std::string dir;
  double window = 24.0;
  summarize->add_option("dir", dir, "Output directory")->required();
  summarize->add_option("--window", window, "Trailing window in hours");
  summarize->fallthrough();

  auto* presets = app.add_subcommand("presets", "Preset configurations");
  auto* presets_list = presets->add_subcommand("list", "List presets");
  presets->require_subcommand(1);
  presets->fallthrough();
  presets_list->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*simulate) {
      const fs::path path = resolve_config(config_arg);
      ExperimentConfig cfg = load_config(path.string());
      if (seed) cfg.seed = *seed;
      const fs::path out_dir = out.empty() ? fs::path("out") / path.stem() : fs::path(out);
      const ExperimentResult result = run_experiment(cfg);
      write_outputs(out_dir, cfg, result, force);
      std::cout << fmt::format("wrote {} (target LacI mean {:.4g}, TetR mean {:.4g} over the last {:.4g} h)\n",
                               out_dir.string(), result.metrics.target_laci.mean, result.metrics.target_tetr.mean,
                               (result.metrics.window_end - result.metrics.window_start) / 60.0);
    } else if (*curves) {
      if (!(period > 0.0)) throw ValidationError("period", "must be > 0");
      const std::vector<Inputs> grid = parse_grid_spec(grid_spec);
      const ModelParams p;
      const ReducedParams rp = reduce_params(p);
      CurveDatabase db;
      for (std::size_t i = 0; i < grid.size(); ++i) db.curves.push_back(build_curve(static_cast<int>(i), grid[i], p, rp, period));
      if (out.empty()) {
        write_database_csv(std::cout, db);
      } else {
        if (fs::exists(out) && !force) throw ValidationError("out", "'" + out + "' exists; pass --force to overwrite");
        std::ofstream os(out, std::ios::binary | std::ios::trunc);
        if (!os) throw ValidationError("out", "cannot write '" + out + "'");
        write_database_csv(os, db);
      }
    } else if (*summarize) {
      write_metrics_csv(std::cout, summarize_directory(dir, window));
    } else if (*presets_list) {
      for (const auto& p : preset_files()) std::cout << fmt::format("{:<8} {}\n", p.stem().string(), first_comment(p));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
