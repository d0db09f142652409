#pragma once

#include <array>
#include <stdexcept>

#include "selftest/bell.hpp"
#include "selftest/linalg.hpp"

namespace selftest::extraction {

using linalg::Matrix;

class NotInvolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when S^2 <= 1 fails for the second operator of construction A.
class NotContractionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computed channel failed its own positivity certificate. Should never happen.
class ChannelConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Qubit-output map rho -> (1/2)[<e1,rho> 1 + <eX,rho> X + <eY,rho> Y + <eZ,rho> Z].
struct PauliChannel {
  Matrix e1, eX, eY, eZ;

  int input_dim() const { return static_cast<int>(e1.rows()); }
  const Matrix& component(linalg::Pauli p) const;
  /// Bloch vector (<eX,rho>, <eY,rho>, <eZ,rho>).
  std::array<double, 3> bloch(const Matrix& rho) const;
  Matrix apply(const Matrix& rho) const;
};

/// Choi operator sum_ij |i><j| (x) L(|i><j|) = (1/2) sum_P e_P^T (x) P, input factor first.
struct ChoiMatrix {
  Matrix matrix;
  int input_dim = 0;

  double min_eigenvalue() const;
  bool psd(double tol = 1e-9) const { return min_eigenvalue() >= -tol; }
  /// tr_in[(rho^T (x) 1) C].
  Matrix apply(const Matrix& rho) const;
  /// Partial trace over the output qubit; the identity for trace-preserving maps.
  Matrix output_trace() const;
};

/// (1/(4 sqrt2)) [3(R + S) - (SRS + RSR)]; operator norm at most 1 for involutions.
Matrix t_operator(const Matrix& r0, const Matrix& s0);

/// Swap-circuit channel: Z follows the involution r0, X follows s0 (S^2 <= 1 suffices).
PauliChannel channel_a(const Matrix& r0, const Matrix& s0);
/// Second construction: X follows (r0 + s0)/sqrt2 and Z follows (r0 - s0)/sqrt2 when they anticommute.
PauliChannel channel_b(const Matrix& r0, const Matrix& s0);

ChoiMatrix choi(const PauliChannel& ch);

/// Replaces every observable by the sign of its spectrum (0 -> +1).
bell::Realization projectivize(const bell::Realization& r);

/// Alice: channel_a(A2, T(A0, A1)); Bob: channel_b(B0, B1).
std::pair<PauliChannel, PauliChannel> extraction_channels(const bell::Realization& r);

/// Two-qubit output of the local channels; non-projective inputs are projectivized first.
Matrix combined_extraction(const bell::Realization& r);

/// <Phi+, combined_extraction(r)>.
double extraction_fidelity(const bell::Realization& r);

/// Operators on the joint input space with <C_P, rho> = <sigma, P (x) P>.
struct COperators {
  Matrix cX, cY, cZ;
};
COperators c_operators(const bell::Realization& r);

struct TwirlReport {
  double xx = 0.0, yy = 0.0, zz = 0.0;
  double sum = 0.0;          // XX + YY + ZZ
  double flipped_sum = 0.0;  // -XX - YY + ZZ
  double bound_xz = 0.0;     // (XX + ZZ)/2
  double bound_yz = 0.0;     // (-YY + ZZ)/2
  double fidelity = 0.0;     // (1 + XX - YY + ZZ)/4
};

/// Throws NotStateError for invalid input and ChannelConsistencyError if either sum exceeds 1.
TwirlReport pauli_twirl_bounds(const Matrix& tau);

}  // namespace selftest::extraction
