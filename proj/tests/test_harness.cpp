#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "toggle/config.hpp"
#include "toggle/errors.hpp"
#include "toggle/experiment.hpp"
#include "toggle/metrics.hpp"

using namespace toggle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string error_key(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.key();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("toggle_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(TOGGLE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Trajectory<FullState> flat_cell(int id, double laci, double horizon) {
  Trajectory<FullState> t;
  t.cell_id = id;
  for (int i = 0; i <= static_cast<int>(horizon); ++i) t.append({double(i), {0, 0, laci, 300.0, 0, 0}, {}, 0.5});
  return t;
}

}  // namespace

TEST_CASE("empty config gives the defaults", "[config]") {
  const ExperimentConfig c = parse("");
  CHECK(c.kind == SimKind::deterministic);
  CHECK(c.controller == ControllerKind::none);
  CHECK(c.horizon_h == 48.0);
  CHECK(c.n_cells == 1);
  CHECK(c.params.k_m_L == ModelParams{}.k_m_L);
  CHECK(c.window_h == 24.0);
}

TEST_CASE("config errors name the key", "[config][errors]") {
  CHECK(error_key("[sim]\nhorizon = -1\n").find("horizon") != std::string::npos);
  CHECK(error_key("[sim]\nbogus = 1\n") == "sim.bogus");
  CHECK(error_key("[nope]\nx = 1\n") == "nope.x");
  CHECK(error_key("[sim]\nn_cells = many\n") == "sim.n_cells");
  CHECK(error_key("[sim]\nhorizon = 4h\n") == "sim.horizon");
  CHECK(error_key("[control]\ncontroller = mpc\n") == "control.controller");
  CHECK(error_key("[control]\nanti_windup = maybe\n") == "control.anti_windup");
  CHECK(error_key("[model]\nparams = other\n") == "model.params");
  CHECK(error_key("[model]\ng_p_L = 0\n") == "model.g_p_L");
  CHECK(error_key("[sim]\nkind = ssa\nn_cells = 2\n[control]\ntarget_cell = 2\n") == "control.target_cell");
  CHECK(error_key("[sim]\nn_cells = 4\n") == "sim.n_cells");
  CHECK(error_key("[pulse]\nduty = 2\n") == "pulse.duty");
  CHECK(error_key("[sim]\nseed = -3\n") == "sim.seed");
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ValidationError);
}

TEST_CASE("model overrides apply on top of the named set", "[config]") {
  const ExperimentConfig c = parse("[model]\nparams = lugagne2017\nk_m_L = 9.5\n");
  CHECK(c.params.k_m_L == 9.5);
  CHECK(c.params.k_m_T == ModelParams{}.k_m_T);
}

TEST_CASE("effective config echo parses back to the same config", "[config]") {
  ExperimentConfig c = load_config(TOGGLE_PRESET_DIR "/fig6c.cfg");
  c.params.theta_LacI = 1.0 / 3.0;
  std::ostringstream os;
  write_config(os, c);
  std::istringstream is(os.str());
  const ExperimentConfig back = parse_config(is);
  std::ostringstream os2;
  write_config(os2, back);
  CHECK(os.str() == os2.str());
  CHECK(back.params.theta_LacI == 1.0 / 3.0);
}

TEST_CASE("presets load", "[config][presets]") {
  for (const char* name : {"fig3a", "fig3b", "fig6a", "fig6b", "fig6c", "fig8a", "fig8b", "fig8c"}) {
    INFO(name);
    CHECK_NOTHROW(load_config(std::string(TOGGLE_PRESET_DIR) + "/" + name + ".cfg"));
  }
  const ExperimentConfig b = load_config(TOGGLE_PRESET_DIR "/fig6b.cfg");
  CHECK(b.controller == ControllerKind::pipwm);
  CHECK(b.pulse.amp_atc == 35.0);
  CHECK(b.pulse.amp_iptg == 0.35);
  CHECK(b.pulse.period == 240.0);
  CHECK(b.pipwm.kp == 0.051);
  CHECK(b.pipwm.ki == 2.37e-4);
  CHECK(b.laci_ref == 750.0);
  CHECK(b.tetr_ref == 300.0);
  CHECK(b.horizon_h == 72.0);
  const ExperimentConfig a = load_config(TOGGLE_PRESET_DIR "/fig3a.cfg");
  CHECK(a.n_cells == 16);
  CHECK(a.kp_laci == 0.05);
  CHECK(a.ki_laci == 4e-4);
  CHECK(a.kp_tetr == 0.025);
  CHECK(a.ki_tetr == 6.94e-4);
  CHECK(load_config(TOGGLE_PRESET_DIR "/fig3b.cfg").pulse.period == 100.0);
  CHECK(load_config(TOGGLE_PRESET_DIR "/fig6c.cfg").n_cells == 17);
}

TEST_CASE("summary statistics", "[metrics]") {
  ExperimentConfig cfg;
  cfg.controller = ControllerKind::pi_population;
  SECTION("constant trajectory") {
    std::vector<Trajectory<FullState>> cells{flat_cell(0, 750.0, 600.0)};
    const SummaryMetrics m = summarize(cells, cfg, 5.0);
    CHECK(m.target_laci.mean == 750.0);
    CHECK(m.target_laci.sd == 0.0);
    CHECK(m.laci_error == 0.0);
    CHECK(m.window_start == 300.0);
    CHECK(m.window_end == 600.0);
  }
  SECTION("two cells: population sd uses denominator n") {
    std::vector<Trajectory<FullState>> cells{flat_cell(0, 700.0, 600.0), flat_cell(1, 800.0, 600.0)};
    const SummaryMetrics m = summarize(cells, cfg, 5.0);
    CHECK_THAT(m.population_laci.sd, WithinAbs(50.0, 1e-12));
    CHECK_THAT(m.population_laci.mean, WithinAbs(750.0, 1e-12));
    CHECK(m.population_laci_error == 0.0);
    CHECK(m.nontarget_laci_sd == 0.0);
  }
  SECTION("time sd of a square wave") {
    Trajectory<FullState> t;
    for (int i = 0; i <= 600; ++i) t.append({double(i), {0, 0, (i / 10) % 2 ? 800.0 : 700.0, 300, 0, 0}, {}, 0.5});
    std::vector<Trajectory<FullState>> cells{t};
    const SummaryMetrics m = summarize(cells, cfg, 5.0);
    CHECK_THAT(m.target_laci.mean, WithinRel(750.0, 1e-3));
    CHECK_THAT(m.target_laci.sd, WithinRel(50.0, 0.05));
  }
  SECTION("window longer than the run") {
    std::vector<Trajectory<FullState>> cells{flat_cell(0, 750.0, 600.0)};
    CHECK_THROWS_AS(summarize(cells, cfg, 11.0), ValidationError);
  }
  SECTION("per-period sigma integrals") {
    cfg.controller = ControllerKind::zad;
    cfg.pulse.period = 100.0;
    std::vector<Trajectory<FullState>> cells{flat_cell(0, 750.0 + cfg.params.theta_LacI, 600.0)};
    const SummaryMetrics m = summarize(cells, cfg, 5.0);
    CHECK(m.sigma_periods == std::vector<int>{3, 4, 5});
    for (double v : m.sigma_integral) CHECK_THAT(v, WithinRel(100.0, 1e-12));
    CHECK_THAT(m.sigma_ratio, WithinRel(1.0, 1e-12));
    CHECK(m.duties.size() == 3);
  }
}

TEST_CASE("experiment output directory", "[experiment]") {
  ExperimentConfig cfg = parse("[sim]\nhorizon = 8\n[output]\nwindow = 4\n[control]\ncontroller = zad\n");
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.log.size() == 2);
  const fs::path dir = scratch("outputs");
  write_outputs(dir, cfg, r, false);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"config.effective.cfg", "controller_log.csv", "metrics.csv", "trajectories.csv"});
  CHECK(slurp(dir / kTrajectoriesCsv).rfind(
            "time_min,cell_id,mrna_laci,mrna_tetr,laci,tetr,atc_intra,iptg_intra,u_atc,u_iptg,duty\n", 0) == 0);
  CHECK(slurp(dir / kControllerLogCsv).rfind("period_k,error,duty,accumulator\n", 0) == 0);
  CHECK_THROWS_AS(write_outputs(dir, cfg, r, false), ValidationError);
  CHECK_NOTHROW(write_outputs(dir, cfg, r, true));

  const SummaryMetrics again = summarize_directory(dir, 4.0);
  CHECK_THAT(again.target_laci.mean, WithinRel(r.metrics.target_laci.mean, 1e-8));
  CHECK_THROWS_AS(summarize_directory(dir, 9.0), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("fixed seed gives byte-identical stochastic output", "[experiment]") {
  ExperimentConfig cfg = load_config(TOGGLE_PRESET_DIR "/fig3a.cfg");
  cfg.horizon_h = 6.0;
  cfg.window_h = 2.0;
  auto csv = [](const ExperimentResult& r) {
    std::ostringstream os;
    write_trajectories_csv(os, r.cells);
    return os.str();
  };
  const std::string a = csv(run_experiment(cfg));
  CHECK(a == csv(run_experiment(cfg)));
  cfg.seed += 1;
  CHECK(a != csv(run_experiment(cfg)));
}

TEST_CASE("population-PI preset emits 16 cells", "[experiment]") {
  const ExperimentConfig cfg = load_config(TOGGLE_PRESET_DIR "/fig3a.cfg");
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.cells.size() == 16);
  for (const auto& c : r.cells) CHECK(c.t_end() == 48.0 * 60.0);
  CHECK(r.log.size() == 48u * 12u);
}

TEST_CASE("initial conditions", "[experiment]") {
  ExperimentConfig cfg;
  const FullState hi = initial_state(cfg);
  cfg.initial = InitialCondition::low_laci;
  const FullState lo = initial_state(cfg);
  CHECK(hi.laci > hi.tetr);
  CHECK(lo.laci < lo.tetr);
  CHECK(hi.atc == 0.0);
}

TEST_CASE("command-line exit codes", "[cli]") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("presets list") == 0);
  CHECK(run_cli("simulate fig8a --out " + dir.string()) == 0);
  CHECK(run_cli("simulate fig8a --out " + dir.string()) == 1);  // no --force
  CHECK(run_cli("simulate fig8a --force --out " + dir.string()) == 0);
  CHECK(run_cli("summarize " + dir.string() + " --window 12") == 0);
  CHECK(run_cli("summarize " + dir.string() + " --window 100") == 1);
  CHECK(run_cli("simulate /does/not/exist.cfg") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("curves --grid-spec '35,0.35' --out " + (dir / "c.csv").string()) == 0);
  CHECK(slurp(dir / "c.csv").size() > 0);
  CHECK(run_cli("curves --grid-spec 'x,y'") == 1);

  std::ofstream(dir / "stiff.cfg") << "[sim]\ntol = 1e-300\nhorizon = 1\n[output]\nwindow = 1\n";
  CHECK(run_cli("simulate " + (dir / "stiff.cfg").string() + " --out " + (dir / "stiff").string()) == 2);
  fs::remove_all(dir);
}
