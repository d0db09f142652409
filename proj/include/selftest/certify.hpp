#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "selftest/bell.hpp"
#include "selftest/relaxation.hpp"

// Numerical studies built on the moment relaxations.
namespace selftest::certify {

enum class CurveKind { fidelity_vs_beta, marginal_vs_beta, guessing_vs_eta };
const char* to_string(CurveKind k);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  std::string status;  // solver status, or "analytic" / "feasible"
};

struct BoundCurve {
  CurveKind kind = CurveKind::fidelity_vs_beta;
  std::string level;
  double tol = 0.0;
  std::vector<CurvePoint> points;

  bool all_converged() const;  // optimal, near-optimal or analytic at every point
};

/// `x,y,status`.
void write_csv(std::ostream& os, const BoundCurve& c);

struct StudyOptions {
  npa::Field field = npa::Field::real;
  sdp::SolverOptions solver{};
  int jobs = 1;
};

/// Swap-method ingredients for a = sqrt2: <sigma, P (x) P> = <C_P, rho>.
npa::OperatorPolynomial cy_polynomial();
npa::OperatorPolynomial cz_polynomial();

/// For every t: (1/2) min <-C_Y + C_Z> subject to beta = t (a = sqrt2, swap level), using the certified
/// lower bound. Points with a failed solve keep their status and a NaN value.
BoundCurve fidelity_curve(const std::vector<double>& t_grid, const StudyOptions& opt = {});

struct MarginalBound {
  double value = 0.0;      // solver optimum
  double certified = 0.0;  // certified upper bound
  sdp::Status status = sdp::Status::optimal;
};

/// max <A_x> subject to beta = beta0 at the 1+AB level.
MarginalBound max_marginal(double beta0, int x, double alpha = 1.0, const npa::Commutation& comm = {},
                           const StudyOptions& opt = {});

BoundCurve marginal_curve(const std::vector<double>& beta_grid, int x, double alpha = 1.0,
                          const StudyOptions& opt = {});

struct FeasiblePoint {
  double beta = 0.0;
  double marginal = 0.0;
  double r = 0.0;
  double u = 0.0;
  bool degenerate = false;  // top eigenvalue not simple
};

/// Top eigenvectors of r A_x (x) 1 + W over ideal two-qubit observables at angle u, for every (r, u).
std::vector<FeasiblePoint> tilted_points(int x, const std::vector<double>& r_grid, const std::vector<double>& u_grid,
                                         double alpha = 1.0);
/// Upper convex hull in the (beta, marginal) plane, sorted by beta.
std::vector<FeasiblePoint> upper_hull(std::vector<FeasiblePoint> pts);
std::vector<FeasiblePoint> feasible_points(int x, const std::vector<double>& r_grid, const std::vector<double>& u_grid,
                                           double alpha = 1.0);
/// Largest marginal on the hull at the given beta (linear interpolation); -inf outside the hull's range.
double hull_value(const std::vector<FeasiblePoint>& hull, double beta);

/// Realization with <A_2> = 1 at beta = 2 sqrt5 (a = 1): the [A0,A1] = 0 witness with the parties exchanged.
bell::Realization deterministic_a2_witness();

/// Guessing probability from a bias bound.
double guessing_probability(double marginal_bound);
/// Tsirelson-type trade-off for CHSH value s: 1/2 + (1/2) sqrt(2 - s^2/4), 1 below the local bound.
double chsh_guessing_analytic(double s);
/// Certified bound on <A_0> for CHSH value s from our own relaxation (1+AB level, two settings).
MarginalBound chsh_max_marginal(double s, const StudyOptions& opt = {});

struct NoiseComparison {
  BoundCurve ours;   // a = 1, beta(eta) = 5 (1 - eta)
  BoundCurve chsh;   // analytic, s(eta) = 2 sqrt2 (1 - eta)
  BoundCurve chsh_numeric;
};

NoiseComparison guessing_vs_noise(const std::vector<double>& eta_grid, const StudyOptions& opt = {});

struct CommutationRow {
  std::string label;
  npa::Commutation constraint;
  double reference = 0.0;  // literature value
  double value = 0.0;
  double certified = 0.0;
  sdp::Status status = sdp::Status::optimal;
};

/// The six Alice-side constraint sets at a = 1. The literature values match the 1+AB level; the swap level
/// is tighter for the rows where one observable commutes with both others (it is then effectively classical).
std::vector<CommutationRow> commutation_rows();
std::vector<CommutationRow> commutation_maxima(npa::Level level = npa::Level::one_plus_ab, const StudyOptions& opt = {});

struct Witness {
  std::string label;
  bell::Realization realization;
  double beta = 0.0;
  double expected_beta = 0.0;
  std::vector<std::pair<std::string, double>> commutators;  // ||[., .]||_F that should vanish
};

/// Two-qubit realizations on Phi+ that saturate the [A0,A1] = 0 and [A0,A2] = 0 bounds, and the
/// A0 <-> A1, B2 -> -B2 variant for [A1,A2] = 0.
std::vector<Witness> commutation_witnesses();

}  // namespace selftest::certify
