#include <catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "toggle/equilibria.hpp"

using namespace toggle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ModelParams kP;
const ReducedParams kRp = reduce_params(kP);

EquilibriumCurve line_curve(int id, double x2, std::vector<double> x1s) {
  EquilibriumCurve c;
  c.id = id;
  for (std::size_t i = 0; i < x1s.size(); ++i) {
    c.points.push_back({static_cast<double>(i) / static_cast<double>(x1s.size() - 1), {x1s[i], x2}, true, false, 0});
  }
  c.compute_arc_length();
  return c;
}

}  // namespace

TEST_CASE("unforced model: two stable equilibria around a saddle", "[equilibria]") {
  const AvgModelInputs unforced{1.0, 1.0, 1.0, 0.5};
  const auto eqs = all_equilibria(unforced, kRp);
  const auto ref = oracle::equilibria(1.0, 1.0, 0.5);
  REQUIRE(eqs.size() == 3);
  REQUIRE(ref.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_THAT(eqs[i].x1, WithinRel(ref[i].x[0], 1e-8));
    CHECK_THAT(eqs[i].x2, WithinRel(ref[i].x[1], 1e-8));
    CHECK(stability(eqs[i], unforced, kRp).stable == ref[i].stable);
  }
  CHECK(stability(eqs[0], unforced, kRp).stable);
  CHECK_FALSE(stability(eqs[1], unforced, kRp).stable);
  CHECK(stability(eqs[2], unforced, kRp).stable);
  const auto saddle = stability(eqs[1], unforced, kRp);
  CHECK(saddle.lambda1.real() * saddle.lambda2.real() < 0.0);
}

TEST_CASE("Newton from a nearby guess", "[equilibria]") {
  const AvgModelInputs a = AvgModelInputs::from_pulse({50.0, 0.5, 240.0, 1.0}, kP);
  const NewtonResult r = find_equilibrium_newton(a, kRp, {100.0, 3.0});
  const auto ref = oracle::equilibria(oracle::w1(50.0), oracle::w2(0.5), 1.0);
  REQUIRE(ref.size() == 1);
  CHECK_THAT(r.x.x1, WithinRel(ref[0].x[0], 1e-9));
  CHECK_THAT(r.x.x2, WithinRel(ref[0].x[1], 1e-9));
  CHECK(r.residual < 1e-10);
  CHECK(r.iterations <= 100);
  CHECK(find_equilibrium(a, kRp, {100.0, 3.0}).x1 == r.x.x1);
}

TEST_CASE("Newton failure modes", "[equilibria][errors]") {
  const AvgModelInputs a{1.0, 1.0, 1.0, 0.5};
  CHECK_THROWS_AS(find_equilibrium_newton(a, kRp, {std::nan(""), 1.0}), ValidationError);
  ReducedParams overflow = kRp;
  overflow.k1_0 = 1e308;
  overflow.k1 = 1e308;
  try {
    find_equilibrium_newton(a, overflow, {1.0, 1.0});
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.last_iterate().x1 == 1.0);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
  CHECK_THROWS_AS(find_equilibrium_newton({0.0, 1.0, 1.0, 0.5}, kRp, {1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(find_equilibrium_newton({1.0, 1.0, 1.0, 1.2}, kRp, {1.0, 1.0}), ValidationError);
}

TEST_CASE("Jacobian matches finite differences", "[equilibria]") {
  const AvgModelInputs a = AvgModelInputs::from_pulse({35.0, 0.35, 240.0, 0.4}, kP);
  const ReducedState x{15.0, 7.0};
  const auto J = avg_jacobian(x, a, kRp);
  const double h = 1e-6;
  const ReducedState f1p = avg_rhs({x.x1 + h, x.x2}, a, kRp), f1m = avg_rhs({x.x1 - h, x.x2}, a, kRp);
  const ReducedState f2p = avg_rhs({x.x1, x.x2 + h}, a, kRp), f2m = avg_rhs({x.x1, x.x2 - h}, a, kRp);
  CHECK_THAT(J[0][0], WithinRel((f1p.x1 - f1m.x1) / (2 * h), 1e-6));
  CHECK_THAT(J[1][0], WithinRel((f1p.x2 - f1m.x2) / (2 * h), 1e-6));
  CHECK_THAT(J[0][1], WithinRel((f2p.x1 - f2m.x1) / (2 * h), 1e-6));
  CHECK_THAT(J[1][1], WithinRel((f2p.x2 - f2m.x2) / (2 * h), 1e-6));
}

TEST_CASE("equilibrium curve over the duty grid", "[equilibria]") {
  const auto grid = duty_grid();
  REQUIRE(grid.size() == 101);
  CHECK(grid.front() == 0.0);
  CHECK(grid[37] == 0.37);
  CHECK(grid.back() == 1.0);

  const EquilibriumCurve c = build_curve(7, {50.0, 0.5}, kP, kRp);
  REQUIRE(c.points.size() == 101);
  CHECK(c.id == 7);
  CHECK(c.arc_length.front() == 0.0);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto& pt = c.points[i];
    CHECK(pt.duty == grid[i]);
    CHECK(pt.stable);
    const auto a = AvgModelInputs::from_pulse({50.0, 0.5, 240.0, pt.duty}, kP);
    const ReducedState f = avg_rhs(pt.x, a, kRp);
    CHECK(std::max(std::abs(f.x1), std::abs(f.x2)) < 1e-9);
    if (i > 0) CHECK(c.arc_length[i] >= c.arc_length[i - 1]);
  }
  const auto ref = oracle::equilibria(oracle::w1(50.0), oracle::w2(0.5), 1.0);
  CHECK_THAT(c.points.back().x.x1, WithinRel(ref[0].x[0], 1e-9));
  CHECK_THAT(c.total_length(), WithinRel(c.arc_length.back(), 0.0));
}

TEST_CASE("multistable duty points are followed along the stable branch and flagged", "[equilibria]") {
  const EquilibriumCurve c = build_curve(0, {35.0, 0.35}, kP, kRp);
  for (const auto& pt : c.points) {
    const auto ref = oracle::equilibria(oracle::w1(35.0), oracle::w2(0.35), pt.duty);
    int n_stable = 0;
    for (const auto& e : ref) n_stable += e.stable ? 1 : 0;
    CHECK(pt.multistable == (n_stable > 1));
  }
  CHECK(c.points[37].multistable);
  CHECK_FALSE(c.points[36].multistable);
  // Continuation keeps the branch coming from the IPTG-dominant side.
  CHECK(c.points[37].x.x2 > c.points[38].x.x2);
  CHECK(std::abs(c.points[37].x.x1 - c.points[36].x.x1) < std::abs(c.points[38].x.x1 - c.points[36].x.x1));
}

TEST_CASE("default curve database", "[equilibria]") {
  const auto grid = default_amplitude_grid();
  REQUIRE(grid.size() == 60);
  CHECK(grid[0] == Inputs{100.0, 0.05});
  CHECK(grid[19] == Inputs{100.0, 1.0});
  CHECK(grid[20] == Inputs{5.0, 1.0});
  CHECK(grid[46] == Inputs{35.0, 0.35});
  CHECK(grid[59] == Inputs{100.0, 1.0});

  const CurveDatabase db = build_database(kP);
  REQUIRE(db.curves.size() == 60);
  CHECK(db.curve(46).amplitudes == Inputs{35.0, 0.35});
  CHECK_THROWS_AS(db.curve(60), ValidationError);
  std::size_t rows = 0;
  for (const auto& c : db.curves) rows += c.points.size();
  CHECK(rows == 6060);
}

TEST_CASE("projection onto a polyline", "[equilibria]") {
  const EquilibriumCurve c = line_curve(0, 1.0, {0.0, 1.0, 2.0, 3.0});
  SECTION("vertex hit") {
    const auto pr = project_onto(c, {1.0, 1.0});
    CHECK(pr.distance == 0.0);
    CHECK_THAT(pr.duty, WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(pr.arc == 1.0);
  }
  SECTION("interior of a segment") {
    const auto pr = project_onto(c, {2.5, 3.0});
    CHECK(pr.segment == 2);
    CHECK_THAT(pr.fraction, WithinAbs(0.5, 1e-15));
    CHECK_THAT(pr.distance, WithinAbs(2.0, 1e-15));
    CHECK_THAT(pr.arc, WithinAbs(2.5, 1e-15));
  }
  SECTION("beyond the ends clamps to the endpoints") {
    CHECK(project_onto(c, {-5.0, 1.0}).arc == 0.0);
    CHECK(project_onto(c, {9.0, 1.0}).arc == 3.0);
  }
  SECTION("ties resolve to the lowest duty") {
    const EquilibriumCurve v = line_curve(0, 0.0, {0.0, 1.0, 0.0});  // folds back on itself
    CHECK(project_onto(v, {0.5, 0.0}).duty == 0.25);
  }
  SECTION("empty curve") {
    CHECK_THROWS_AS(project_onto(EquilibriumCurve{}, {0.0, 0.0}), ValidationError);
  }
}

TEST_CASE("arc-length error sign", "[equilibria]") {
  const EquilibriumCurve c = line_curve(3, 0.0, {0.0, 1.0, 2.0, 3.0});
  const auto same = project_and_error(c, {1.2, 0.5}, {1.2, 0.5});
  CHECK(same.e_pi == 0.0);
  const auto pos = project_and_error(c, {2.0, 0.0}, {0.5, 1.0});
  CHECK_THAT(pos.e_pi, WithinAbs(1.5, 1e-15));
  CHECK(pos.curve_id == 3);
  CHECK_THAT(pos.duty_ref, WithinAbs(2.0 / 3.0, 1e-15));
  const auto neg = project_and_error(c, {0.5, 0.0}, {2.0, 0.0});
  CHECK(neg.e_pi < 0.0);
}

TEST_CASE("nearest point across curves", "[equilibria]") {
  CurveDatabase db;
  db.curves.push_back(line_curve(5, 2.0, {0.0, 4.0}));
  db.curves.push_back(line_curve(2, 0.0, {0.0, 4.0}));
  const auto np = nearest_point(db, {1.0, 1.0});  // equidistant from both
  CHECK(np.curve_id == 2);
  CHECK(np.distance == 1.0);
  CHECK(nearest_point(db, {1.0, 1.9}).curve_id == 5);
  CHECK_THROWS_AS(nearest_point(db, {-1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(nearest_point(CurveDatabase{}, {1.0, 1.0}), ValidationError);
}

TEST_CASE("database CSV", "[equilibria]") {
  CurveDatabase db;
  db.curves.push_back(build_curve(0, {35.0, 0.35}, kP, kRp));
  std::ostringstream os;
  write_database_csv(os, db);
  const std::string text = os.str();
  CHECK(text.rfind("curve_id,u_atc,u_iptg,D,x1,x2,stable\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 102);

  std::istringstream is(text);
  const CurveDatabase back = read_database_csv(is);
  REQUIRE(back.curves.size() == 1);
  CHECK(back.curves[0].amplitudes == Inputs{35.0, 0.35});
  for (std::size_t i = 0; i < 101; ++i) {
    CHECK(back.curves[0].points[i].x.x1 == db.curves[0].points[i].x.x1);
    CHECK(back.curves[0].points[i].duty == db.curves[0].points[i].duty);
  }

  std::ostringstream again;
  CurveDatabase db2;
  db2.curves.push_back(build_curve(0, {35.0, 0.35}, kP, kRp));
  write_database_csv(again, db2);
  CHECK(again.str() == text);

  std::istringstream bad_header("id,a\n");
  CHECK_THROWS_AS(read_database_csv(bad_header), ValidationError);
  std::istringstream bad_row("curve_id,u_atc,u_iptg,D,x1,x2,stable\n0,1,2,x,4,5,1\n");
  CHECK_THROWS_AS(read_database_csv(bad_row), ValidationError);
}
