#pragma once

// Equilibria of the averaged model, D-parameterised equilibrium curves, the
// curve database used for model inversion and arc-length projection error.

#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "toggle/errors.hpp"
#include "toggle/model.hpp"

namespace toggle {

/// Newton did not converge; carries the last iterate.
class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, ReducedState last, int iterations)
      : NumericalError(what), last_(last), iterations_(iterations) {}
  ReducedState last_iterate() const { return last_; }
  int iterations() const { return iterations_; }

 private:
  ReducedState last_;
  int iterations_;
};

struct NewtonResult {
  ReducedState x;
  int iterations = 0;
  double residual = 0.0;  // max-norm of avg_rhs / epsilon
};

/// Damped Newton on avg_rhs = 0 from `guess` (at most 100 iterations).
NewtonResult find_equilibrium_newton(const AvgModelInputs& a, const ReducedParams& rp, ReducedState guess);

inline ReducedState find_equilibrium(const AvgModelInputs& a, const ReducedParams& rp, ReducedState guess) {
  return find_equilibrium_newton(a, rp, guess).x;
}

/// Analytic Jacobian of avg_rhs (including the epsilon factor).
std::array<std::array<double, 2>, 2> avg_jacobian(const ReducedState& x, const AvgModelInputs& a,
                                                   const ReducedParams& rp);

struct StabilityInfo {
  bool stable = false;
  std::complex<double> lambda1;
  std::complex<double> lambda2;
};

StabilityInfo stability(const ReducedState& eq, const AvgModelInputs& a, const ReducedParams& rp);

/// Every equilibrium of the averaged model, ordered by increasing x2. Uses the
/// explicit x1(x2) relation of the first equation and brackets the roots of
/// the remaining scalar equation, then polishes each with Newton.
std::vector<ReducedState> all_equilibria(const AvgModelInputs& a, const ReducedParams& rp);

struct CurvePoint {
  double duty = 0.0;
  ReducedState x;
  bool stable = true;
  bool multistable = false;  // another stable equilibrium exists at this duty
  int newton_iterations = 0;
};

struct EquilibriumCurve {
  int id = 0;
  Inputs amplitudes;  // (u_aTc, u_IPTG) pulse amplitudes
  std::vector<CurvePoint> points;
  std::vector<double> arc_length;  // cumulative, arc_length[0] == 0

  void compute_arc_length();
  double total_length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
};

/// Duty grid 0, 0.01, ..., 1.00.
std::vector<double> duty_grid();

/// Continuation in duty along the stable branch that starts at the
/// IPTG-dominant equilibrium for D = 0. Throws NumericalError on a
/// non-convergent or unstable point.
EquilibriumCurve build_curve(int id, Inputs amplitudes, const ModelParams& p, const ReducedParams& rp,
                             double period = 240.0);

struct CurveDatabase {
  std::vector<EquilibriumCurve> curves;

  const EquilibriumCurve& curve(int id) const;
};

/// Default 60 amplitude pairs: ids 0-19 (100, 0.05 j), ids 20-39 (5 j, 1),
/// ids 40-59 (5 j, 0.05 j), j = 1..20.
std::vector<Inputs> default_amplitude_grid();

CurveDatabase build_database(const std::vector<Inputs>& amplitudes, const ModelParams& p);
inline CurveDatabase build_database(const ModelParams& p) { return build_database(default_amplitude_grid(), p); }

struct PolylineProjection {
  std::size_t segment = 0;  // index of the first vertex of the segment
  double fraction = 0.0;    // position inside the segment in [0, 1]
  ReducedState point;
  double distance = 0.0;
  double arc = 0.0;   // arc length from the D = 0 end
  double duty = 0.0;  // duty interpolated along the segment
};

/// Nearest location on the curve polyline; ties resolve to the lowest duty.
PolylineProjection project_onto(const EquilibriumCurve& curve, const ReducedState& x);

struct NearestPoint {
  int curve_id = 0;
  double duty_ref = 0.0;
  ReducedState point;
  double distance = 0.0;
};

/// Nearest point over every curve of the database (Euclidean in (x1, x2));
/// ties resolve to the lowest curve id, then the lowest duty.
NearestPoint nearest_point(const CurveDatabase& db, const ReducedState& target);

struct ProjectionResult {
  int curve_id = 0;
  double duty_ref = 0.0;
  ReducedState ref_projection;
  ReducedState meas_projection;
  double e_pi = 0.0;  // positive when the reference lies at larger duty
};

ProjectionResult project_and_error(const EquilibriumCurve& curve, const ReducedState& ref, const ReducedState& meas);

/// CSV with header curve_id,u_atc,u_iptg,D,x1,x2,stable (17 significant digits).
void write_database_csv(std::ostream& os, const CurveDatabase& db);
CurveDatabase read_database_csv(std::istream& is);

}  // namespace toggle
