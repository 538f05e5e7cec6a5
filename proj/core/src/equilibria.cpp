#include "toggle/equilibria.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace toggle {
namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kNewtonTolerance = 1e-11;  // on avg_rhs / epsilon, max-norm
constexpr int kScanIntervals = 20000;

// avg_rhs without the epsilon factor; equilibria do not depend on it.
ReducedState avg_field(const ReducedState& x, const AvgModelInputs& a, const ReducedParams& rp) {
  AvgModelInputs unit = a;
  unit.epsilon = 1.0;
  return avg_rhs(x, unit, rp);
}

double max_norm(const ReducedState& v) { return std::max(std::abs(v.x1), std::abs(v.x2)); }

double distance(const ReducedState& a, const ReducedState& b) { return std::hypot(a.x1 - b.x1, a.x2 - b.x2); }

}  // namespace

std::array<std::array<double, 2>, 2> avg_jacobian(const ReducedState& x, const AvgModelInputs& a,
                                                   const ReducedParams& rp) {
  const double d = a.duty;
  const double x1s = x.x1 * x.x1;
  const double x2s = x.x2 * x.x2;
  const double s1 = 1.0 + x2s * a.w1_bar;
  const double s2 = 1.0 + x2s;
  const double s3 = 1.0 + x1s;
  const double s4 = 1.0 + x1s * a.w2_bar;
  const double df1_dx2 = -rp.k1 * 2.0 * x.x2 * (d * a.w1_bar / (s1 * s1) + (1.0 - d) / (s2 * s2));
  const double df2_dx1 = -rp.k2 * 2.0 * x.x1 * (d / (s3 * s3) + (1.0 - d) * a.w2_bar / (s4 * s4));
  return {{{-a.epsilon, a.epsilon * df1_dx2}, {a.epsilon * df2_dx1, -a.epsilon}}};
}

NewtonResult find_equilibrium_newton(const AvgModelInputs& a, const ReducedParams& rp, ReducedState guess) {
  a.validate();
  if (!std::isfinite(guess.x1) || !std::isfinite(guess.x2)) throw ValidationError("guess", "must be finite");

  AvgModelInputs unit = a;
  unit.epsilon = 1.0;
  ReducedState x = guess;
  ReducedState f = avg_field(x, a, rp);
  double res = max_norm(f);

  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    if (res < kNewtonTolerance) return {x, it, res};
    const auto j = avg_jacobian(x, unit, rp);
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if (det == 0.0 || !std::isfinite(det)) break;
    const ReducedState step{(-f.x1 * j[1][1] + f.x2 * j[0][1]) / det, (-f.x2 * j[0][0] + f.x1 * j[1][0]) / det};

    // Backtracking on the residual norm.
    double lambda = 1.0;
    ReducedState trial;
    ReducedState f_trial;
    double res_trial = 0.0;
    while (true) {
      trial = {std::max(0.0, x.x1 + lambda * step.x1), std::max(0.0, x.x2 + lambda * step.x2)};
      f_trial = avg_field(trial, a, rp);
      res_trial = max_norm(f_trial);
      if (res_trial < (1.0 - 1e-4 * lambda) * res || lambda < 1.0 / 1024.0) break;
      lambda *= 0.5;
    }
    const bool stalled = distance(trial, x) <= 1e-15 * (1.0 + std::hypot(x.x1, x.x2));
    x = trial;
    f = f_trial;
    res = res_trial;
    if (stalled) {
      if (res < 1e-10) return {x, it + 1, res};
      break;
    }
  }
  if (res < kNewtonTolerance) return {x, kMaxNewtonIterations, res};
  throw NonConvergence(fmt::format("find_equilibrium: no convergence (D = {}, residual {:.3e}, last iterate ({}, {}))",
                                   a.duty, res, x.x1, x.x2),
                       x, kMaxNewtonIterations);
}

StabilityInfo stability(const ReducedState& eq, const AvgModelInputs& a, const ReducedParams& rp) {
  const auto j = avg_jacobian(eq, a, rp);
  const double tr = j[0][0] + j[1][1];
  const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
  const std::complex<double> root = std::sqrt(std::complex<double>(0.25 * tr * tr - det, 0.0));
  StabilityInfo info;
  info.lambda1 = 0.5 * tr + root;
  info.lambda2 = 0.5 * tr - root;
  info.stable = info.lambda1.real() < 0.0 && info.lambda2.real() < 0.0;
  return info;
}

std::vector<ReducedState> all_equilibria(const AvgModelInputs& a, const ReducedParams& rp) {
  a.validate();
  const double d = a.duty;
  auto x1_of = [&](double x2) {
    const double x2s = x2 * x2;
    return rp.k1_0 + rp.k1 * (d / (1.0 + x2s * a.w1_bar) + (1.0 - d) / (1.0 + x2s));
  };
  auto g = [&](double x2) {
    const double x1 = x1_of(x2);
    const double x1s = x1 * x1;
    return rp.k2_0 + rp.k2 * (d / (1.0 + x1s) + (1.0 - d) / (1.0 + x1s * a.w2_bar)) - x2;
  };

  // Every root satisfies 0 < x2 < k2_0 + k2.
  const double hi = rp.k2_0 + rp.k2 + 1.0;
  std::vector<ReducedState> roots;
  double x_prev = 0.0;
  double g_prev = g(x_prev);
  for (int i = 1; i <= kScanIntervals; ++i) {
    const double x_cur = hi * static_cast<double>(i) / kScanIntervals;
    const double g_cur = g(x_cur);
    if (g_cur == 0.0 || (g_prev > 0.0) != (g_cur > 0.0)) {
      double x2 = x_cur;
      if (g_cur != 0.0) {
        boost::uintmax_t max_iter = 200;
        const auto bracket = boost::math::tools::toms748_solve(
            g, x_prev, x_cur, g_prev, g_cur, boost::math::tools::eps_tolerance<double>(52), max_iter);
        x2 = 0.5 * (bracket.first + bracket.second);
      }
      ReducedState seed{x1_of(x2), x2};
      ReducedState polished = seed;
      try {
        polished = find_equilibrium_newton(a, rp, seed).x;
      } catch (const NonConvergence&) {
        polished = seed;
      }
      const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const ReducedState& r) {
        return distance(r, polished) < 1e-7 * (1.0 + std::hypot(r.x1, r.x2));
      });
      if (!duplicate) roots.push_back(polished);
    }
    x_prev = x_cur;
    g_prev = g_cur;
  }
  std::sort(roots.begin(), roots.end(), [](const ReducedState& l, const ReducedState& r) { return l.x2 < r.x2; });
  return roots;
}

void EquilibriumCurve::compute_arc_length() {
  arc_length.assign(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    arc_length[i] = arc_length[i - 1] + distance(points[i - 1].x, points[i].x);
  }
}

std::vector<double> duty_grid() {
  std::vector<double> grid;
  grid.reserve(101);
  for (int i = 0; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

EquilibriumCurve build_curve(int id, Inputs amplitudes, const ModelParams& p, const ReducedParams& rp, double period) {
  PulseWaveSpec spec{amplitudes.atc, amplitudes.iptg, period, 0.0};
  AvgModelInputs a = AvgModelInputs::from_pulse(spec, p);

  EquilibriumCurve curve;
  curve.id = id;
  curve.amplitudes = amplitudes;

  bool have_prev = false;
  ReducedState prev;
  for (double duty : duty_grid()) {
    a.duty = duty;
    std::vector<ReducedState> stable_eqs;
    for (const ReducedState& e : all_equilibria(a, rp)) {
      if (stability(e, a, rp).stable) stable_eqs.push_back(e);
    }
    if (stable_eqs.empty()) {
      throw NumericalError(fmt::format("curve {} ({}, {}): no stable equilibrium at D = {}", id, amplitudes.atc,
                                       amplitudes.iptg, duty));
    }

    // Branch to follow: the IPTG-dominant equilibrium at D = 0, then the
    // stable equilibrium closest to the previous point.
    ReducedState branch = stable_eqs.back();
    if (have_prev) {
      branch = *std::min_element(stable_eqs.begin(), stable_eqs.end(), [&](const auto& l, const auto& r) {
        return distance(l, prev) < distance(r, prev);
      });
    }

    NewtonResult refined;
    bool continued = false;
    if (have_prev) {
      try {
        refined = find_equilibrium_newton(a, rp, prev);
        continued = distance(refined.x, branch) < 1e-6 * (1.0 + std::hypot(branch.x1, branch.x2));
      } catch (const NonConvergence&) {
        continued = false;
      }
    }
    if (!continued) refined = find_equilibrium_newton(a, rp, branch);

    const ReducedState residual = avg_rhs(refined.x, a, rp);
    if (max_norm(residual) >= 1e-9) {
      throw NumericalError(fmt::format("curve {}: residual {:.3e} at D = {}", id, max_norm(residual), duty));
    }
    if (!stability(refined.x, a, rp).stable) {
      throw NumericalError(fmt::format("curve {}: unstable point at D = {}", id, duty));
    }
    curve.points.push_back({duty, refined.x, true, stable_eqs.size() > 1, refined.iterations});
    prev = refined.x;
    have_prev = true;
  }
  curve.compute_arc_length();
  return curve;
}

const EquilibriumCurve& CurveDatabase::curve(int id) const {
  for (const auto& c : curves)
    if (c.id == id) return c;
  throw ValidationError("curve_id", "no curve with id " + std::to_string(id));
}

std::vector<Inputs> default_amplitude_grid() {
  std::vector<Inputs> grid;
  grid.reserve(60);
  for (int j = 1; j <= 20; ++j) grid.push_back({100.0, static_cast<double>(j) / 20.0});
  for (int j = 1; j <= 20; ++j) grid.push_back({5.0 * j, 1.0});
  for (int j = 1; j <= 20; ++j) grid.push_back({5.0 * j, static_cast<double>(j) / 20.0});
  return grid;
}

CurveDatabase build_database(const std::vector<Inputs>& amplitudes, const ModelParams& p) {
  const ReducedParams rp = reduce_params(p);
  CurveDatabase db;
  db.curves.reserve(amplitudes.size());
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    db.curves.push_back(build_curve(static_cast<int>(i), amplitudes[i], p, rp));
  }
  return db;
}

PolylineProjection project_onto(const EquilibriumCurve& curve, const ReducedState& x) {
  const auto& pts = curve.points;
  if (pts.empty()) throw ValidationError("curve", "empty curve");
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (pts.size() == 1) {
    best = {0, 0.0, pts[0].x, distance(pts[0].x, x), 0.0, pts[0].duty};
    return best;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const ReducedState& a = pts[i].x;
    const ReducedState& b = pts[i + 1].x;
    const double dx = b.x1 - a.x1;
    const double dy = b.x2 - a.x2;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((x.x1 - a.x1) * dx + (x.x2 - a.x2) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const ReducedState q = t == 0.0 ? a : (t == 1.0 ? b : ReducedState{a.x1 + t * dx, a.x2 + t * dy});
    const double dist = distance(q, x);
    if (dist < best.distance) {
      const double seg_len = curve.arc_length[i + 1] - curve.arc_length[i];
      best = {i, t, q, dist, curve.arc_length[i] + t * seg_len, pts[i].duty + t * (pts[i + 1].duty - pts[i].duty)};
    }
  }
  return best;
}

NearestPoint nearest_point(const CurveDatabase& db, const ReducedState& target) {
  if (!target.valid()) throw ValidationError("target", "must be finite and nonnegative");
  if (db.curves.empty()) throw ValidationError("database", "no curves");
  NearestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  // Curves are scanned in id order and segments in duty order; strict
  // comparison keeps the first minimiser.
  std::vector<const EquilibriumCurve*> order;
  for (const auto& c : db.curves) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [](const auto* l, const auto* r) { return l->id < r->id; });
  for (const EquilibriumCurve* c : order) {
    const PolylineProjection pr = project_onto(*c, target);
    if (pr.distance < best.distance) best = {c->id, pr.duty, pr.point, pr.distance};
  }
  return best;
}

ProjectionResult project_and_error(const EquilibriumCurve& curve, const ReducedState& ref, const ReducedState& meas) {
  const PolylineProjection r = project_onto(curve, ref);
  const PolylineProjection m = project_onto(curve, meas);
  return {curve.id, r.duty, r.point, m.point, r.arc - m.arc};
}

void write_database_csv(std::ostream& os, const CurveDatabase& db) {
  os << "curve_id,u_atc,u_iptg,D,x1,x2,stable\n";
  for (const auto& c : db.curves) {
    for (const auto& pt : c.points) {
      os << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", c.id, c.amplitudes.atc, c.amplitudes.iptg,
                        pt.duty, pt.x.x1, pt.x.x2, pt.stable ? 1 : 0);
    }
  }
}

CurveDatabase read_database_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "curve_id,u_atc,u_iptg,D,x1,x2,stable") {
    throw ValidationError("database", "unexpected CSV header");
  }
  CurveDatabase db;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 7) throw ValidationError("database", "line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      const int id = std::stoi(f[0]);
      if (db.curves.empty() || db.curves.back().id != id) {
        db.curves.push_back({});
        db.curves.back().id = id;
        db.curves.back().amplitudes = {std::stod(f[1]), std::stod(f[2])};
      }
      db.curves.back().points.push_back({std::stod(f[3]), {std::stod(f[4]), std::stod(f[5])}, f[6] == "1", false, 0});
    } catch (const std::logic_error&) {
      throw ValidationError("database", "line " + std::to_string(line_no) + ": malformed number");
    }
  }
  for (auto& c : db.curves) c.compute_arc_length();
  return db;
}

}  // namespace toggle
