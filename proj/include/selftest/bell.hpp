#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "selftest/linalg.hpp"

namespace selftest::bell {

using linalg::Matrix;

/// The three-setting correlation functional
///   beta = <A0B0> + <A0B1> + a<A0B2> + <A1B0> + <A1B1> - a<A1B2> + a<A2B0> - a<A2B1>
/// restricted to a in (0, 2), where the local and quantum values differ.
class BellFunctional {
 public:
  explicit BellFunctional(double alpha);

  double alpha() const { return alpha_; }
  /// arcsin(alpha / 2), in (0, pi/2).
  double theta() const;
  /// Coefficient of <A_x B_y>.
  double coefficient(int x, int y) const;

  double classical_value() const;
  double quantum_value() const;

 private:
  double alpha_;
};

/// Exhaustive maximum over the 64 deterministic +-1 assignments.
double classical_value_bruteforce(const BellFunctional& f);

/// A bipartite strategy: three binary observables per party and a joint state on C^dA (x) C^dB.
struct Realization {
  int dimA = 0;
  int dimB = 0;
  std::array<Matrix, 3> A;
  std::array<Matrix, 3> B;
  Matrix state;

  Matrix reduced_A() const;
  Matrix reduced_B() const;
  Matrix lift_A(const Matrix& a) const;  // a (x) 1
  Matrix lift_B(const Matrix& b) const;  // 1 (x) b
  bool projective(double tol = 1e-8) const;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidRealizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SupportCheck { require_full_rank, skip };

/// Validates observables (Hermitian, ||O|| <= 1 + 1e-9), the state (PSD, unit trace) and,
/// unless skipped, full-rank reduced states (tolerance 1e-10).
Realization make_realization(std::array<Matrix, 3> A, std::array<Matrix, 3> B, Matrix state,
                             SupportCheck support = SupportCheck::require_full_rank);
Realization make_realization(std::array<Matrix, 3> A, std::array<Matrix, 3> B, const linalg::Vector& psi,
                             SupportCheck support = SupportCheck::require_full_rank);

/// Restricts both local spaces to the supports of the reduced states.
Realization truncate_support(const Realization& r, double tol = 1e-10);

Realization with_state(const Realization& r, const Matrix& state);
/// (1 - eta) Phi+ + eta 1/4.
Matrix isotropic_state(double eta);

Matrix bell_operator(const BellFunctional& f, const Realization& r);
double bell_value(const BellFunctional& f, const Realization& r);

/// L_0, L_1, L_2 of the sum-of-squares decomposition.
std::array<Matrix, 3> sos_operators(const BellFunctional& f, const Realization& r);
/// || 2W - [(2A0^2 + 2A1^2 + a^2 A2^2) (x) 1 + 1 (x) (2B0^2 + 2B1^2 + a^2 B2^2) - sum_j L_j^2] ||_F.
double sos_residual(const BellFunctional& f, const Realization& r);

/// Two-qubit optimal realization on Phi+ with Alice's third observable at angle u.
Realization ideal_realization(const BellFunctional& f, double u);

/// Phi+ (x) sigma with matching blocks: block j uses angle angles[j] for both parties and carries weight
/// weights[j]. Local spaces are C^2 (x) C^k.
Realization block_realization(const BellFunctional& f, const std::vector<double>& angles,
                              const std::vector<double>& weights);

/// Two-qubit Bell operator with Alice at angle u and Bob at angle v.
Matrix r_operator(const BellFunctional& f, double u, double v);
/// 4 + a^2 [2 |cos((u - v)/2)| - 1]: the eigenvalue branch of R(u,v) that reaches 4 + a^2 (at u = v).
/// It is the largest eigenvalue for a <= sqrt2; for larger a another branch can exceed it away from u = v.
double r_max_eigenvalue(const BellFunctional& f, double u, double v);

struct CorrelatorTable {
  std::array<double, 3> marginalA{};
  std::array<double, 3> marginalB{};
  std::array<std::array<double, 3>, 3> corr{};

  double bell_value(const BellFunctional& f) const;
  double max_abs_difference(const CorrelatorTable& other) const;
};

/// Closed-form statistics of ideal_realization(f, u).
CorrelatorTable correlators(const BellFunctional& f, double u);
/// Statistics measured on an arbitrary realization.
CorrelatorTable measure_correlators(const Realization& r);

/// CSV with header `x,y,value`; correlator rows first, then marginal rows with `-` in the other column.
void write_csv(std::ostream& os, const CorrelatorTable& t);

struct OptimalityReport {
  std::array<double, 3> alice_second_moment{};  // <A_x^2, rho_A>
  std::array<double, 3> bob_second_moment{};    // <B_y^2, rho_B>
  std::array<double, 3> sos_norm{};             // ||L_j rho^{1/2}||_F
  double anticomm01_deviation = 0.0;            // ||{A0,A1} - (2 - a^2) 1||_inf
  double anticomm2_deviation = 0.0;             // ||{A0 + A1, A2}||_inf
  double bob_anticomm01_deviation = 0.0;
  double bob_anticomm2_deviation = 0.0;         // ||{B0 + B1, B2}||_inf

  double max_deviation() const;
};

/// Throws RankDeficientError when a reduced state is not full rank.
OptimalityReport optimality_conditions(const BellFunctional& f, const Realization& r, double tol = 1e-10);

struct JordanBlock {
  double theta = 0.0;  // {R,S}/2 = cos(2 theta) on the block, theta in [0, pi/2]
  int size = 2;        // 1 or 2
  int sign = 1;        // eigenvalue of R on one-dimensional blocks
};

struct BlockAngles {
  std::vector<JordanBlock> blocks;
  /// Columns form the block basis: on a 2-block R = Z and S = cos(2t) Z + sin(2t) X.
  Matrix basis;

  std::vector<double> angles() const;
};

/// Simultaneous block decomposition of two Hermitian involutions.
BlockAngles jordan_angles(const Matrix& r0, const Matrix& s0, double tol = 1e-8);
/// Rebuilds (R, S) from the block form; inverse of jordan_angles up to 1e-8.
std::pair<Matrix, Matrix> reconstruct(const BlockAngles& b);

/// Explicit block form of an optimal projective realization: local spaces rewritten as C^2 (x) C^d with
/// A2 = sum_j (cos u_j Y + sin u_j Z) (x) |a_j><a_j| and Bob's pair built from angles v_k.
struct Characterization {
  std::vector<double> alice_angles;  // u_j
  std::vector<double> bob_angles;    // v_k
  /// Weight of the state on block (j, k) after the local changes of basis.
  std::vector<std::vector<double>> block_weights;
  /// Weight on blocks with u_j != v_k (zero at maximal violation).
  double mismatched_weight = 0.0;
  /// <Phi+_{A'B'} (x) 1_{A''B''}, rho> in the new bases.
  double qubit_fidelity = 0.0;
  /// Max deviation of the observables from the reconstructed block forms.
  double reconstruction_error = 0.0;
};

Characterization characterize(const BellFunctional& f, const Realization& r, double tol = 1e-6);

}  // namespace selftest::bell
