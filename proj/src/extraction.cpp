#include "selftest/extraction.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace selftest::extraction {

using linalg::cplx;
using linalg::kron;
using linalg::Pauli;
using linalg::pauli;

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr std::array<Pauli, 4> kPaulis{Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};

void require_involution(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw linalg::DimensionError(std::string(name) + " is not square");
  if (!linalg::is_involution(m)) throw NotInvolutionError(std::string(name) + " is not a Hermitian involution");
}

void require_same_dim(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw linalg::DimensionError("operator dimensions differ");
}

}  // namespace

const Matrix& PauliChannel::component(Pauli p) const {
  switch (p) {
    case Pauli::I: return e1;
    case Pauli::X: return eX;
    case Pauli::Y: return eY;
    case Pauli::Z: return eZ;
  }
  return e1;
}

std::array<double, 3> PauliChannel::bloch(const Matrix& rho) const {
  return {linalg::expectation(eX, rho), linalg::expectation(eY, rho), linalg::expectation(eZ, rho)};
}

Matrix PauliChannel::apply(const Matrix& rho) const {
  if (rho.rows() != e1.rows()) throw linalg::DimensionError("input state has wrong dimension");
  Matrix out = Matrix::Zero(2, 2);
  for (Pauli p : kPaulis) out += 0.5 * linalg::expectation(component(p), rho) * pauli(p);
  return out;
}

double ChoiMatrix::min_eigenvalue() const { return linalg::min_eigenvalue(matrix); }

Matrix ChoiMatrix::apply(const Matrix& rho) const {
  if (rho.rows() != input_dim) throw linalg::DimensionError("input state has wrong dimension");
  const Matrix prod = kron(Matrix(rho.transpose()), linalg::identity(2)) * matrix;
  return linalg::partial_trace(prod, input_dim, 2, linalg::Party::B);
}

Matrix ChoiMatrix::output_trace() const { return linalg::partial_trace(matrix, input_dim, 2, linalg::Party::A); }

Matrix t_operator(const Matrix& r0, const Matrix& s0) {
  require_involution(r0, "R");
  require_involution(s0, "S");
  require_same_dim(r0, s0);
  Matrix t = (3.0 * (r0 + s0) - (s0 * r0 * s0 + r0 * s0 * r0)) / (4.0 * std::numbers::sqrt2);
  return 0.5 * (t + t.adjoint());
}

PauliChannel channel_a(const Matrix& r0, const Matrix& s0) {
  require_involution(r0, "R");
  require_same_dim(r0, s0);
  const auto hc = linalg::check_hermitian(s0);
  if (!hc.accepted()) throw linalg::NotHermitianError(hc.max_asymmetry);
  if (linalg::max_eigenvalue(s0 * s0) > 1.0 + 1e-9) throw NotContractionError("S^2 <= 1 violated");

  const auto d = r0.rows();
  PauliChannel ch;
  ch.e1 = linalg::identity(d);
  ch.eX = 0.5 * (s0 - r0 * s0 * r0);
  // Off-diagonal output entry is (1/4)<(1 - R) S (1 + R), rho>, whose imaginary part gives i[S,R]/2.
  ch.eY = cplx(0.0, 0.5) * linalg::commutator(s0, r0);
  ch.eZ = r0;
  return ch;
}

PauliChannel channel_b(const Matrix& r0, const Matrix& s0) {
  require_involution(r0, "R");
  require_involution(s0, "S");
  require_same_dim(r0, s0);
  const double k = 1.0 / (4.0 * std::numbers::sqrt2);
  const Matrix srs = s0 * r0 * s0;
  const Matrix rsr = r0 * s0 * r0;

  PauliChannel ch;
  ch.e1 = linalg::identity(r0.rows());
  ch.eX = k * (3.0 * (r0 + s0) - (srs + rsr));
  ch.eZ = k * (3.0 * (r0 - s0) - (srs - rsr));
  ch.eY = cplx(0.0, 0.5) * linalg::commutator(s0, r0);

  if (!choi(ch).psd()) throw ChannelConsistencyError("second construction produced a non-positive Choi operator");
  return ch;
}

ChoiMatrix choi(const PauliChannel& ch) {
  const int d = ch.input_dim();
  ChoiMatrix c;
  c.input_dim = d;
  c.matrix = Matrix::Zero(2 * d, 2 * d);
  for (Pauli p : kPaulis) c.matrix += 0.5 * kron(Matrix(ch.component(p).transpose()), pauli(p));
  return c;
}

bell::Realization projectivize(const bell::Realization& r) {
  bell::Realization out = r;
  for (int k = 0; k < 3; ++k) {
    out.A[k] = linalg::sign_projection(r.A[k]);
    out.B[k] = linalg::sign_projection(r.B[k]);
  }
  return out;
}

std::pair<PauliChannel, PauliChannel> extraction_channels(const bell::Realization& r) {
  const auto& A = r.A;
  const auto& B = r.B;
  return {channel_a(A[2], t_operator(A[0], A[1])), channel_b(B[0], B[1])};
}

Matrix combined_extraction(const bell::Realization& r) {
  if (r.state.rows() != r.dimA * r.dimB || r.A[0].rows() != r.dimA || r.B[0].rows() != r.dimB)
    throw linalg::DimensionError("realization dimensions are inconsistent");
  const bell::Realization p = r.projective() ? r : projectivize(r);
  const auto [la, lb] = extraction_channels(p);

  Matrix sigma = Matrix::Zero(4, 4);
  for (Pauli a : kPaulis) {
    for (Pauli b : kPaulis) {
      const double v = linalg::expectation(kron(la.component(a), lb.component(b)), p.state);
      sigma += 0.25 * v * kron(pauli(a), pauli(b));
    }
  }
  return sigma;
}

double extraction_fidelity(const bell::Realization& r) {
  return linalg::expectation(linalg::projector(linalg::phi_plus()), combined_extraction(r));
}

COperators c_operators(const bell::Realization& r) {
  const auto [la, lb] = extraction_channels(r);
  return {kron(la.eX, lb.eX), kron(la.eY, lb.eY), kron(la.eZ, lb.eZ)};
}

TwirlReport pauli_twirl_bounds(const Matrix& tau) {
  if (tau.rows() != 4 || tau.cols() != 4) throw NotStateError("expected a two-qubit density matrix");
  if (!linalg::check_hermitian(tau).accepted()) throw NotStateError("state is not Hermitian");
  if (std::abs(tau.trace().real() - 1.0) > 1e-9) throw NotStateError("state does not have unit trace");
  if (linalg::min_eigenvalue(tau) < -1e-9) throw NotStateError("state is not positive semidefinite");

  TwirlReport t;
  t.xx = linalg::expectation(kron(pauli(Pauli::X), pauli(Pauli::X)), tau);
  t.yy = linalg::expectation(kron(pauli(Pauli::Y), pauli(Pauli::Y)), tau);
  t.zz = linalg::expectation(kron(pauli(Pauli::Z), pauli(Pauli::Z)), tau);
  t.sum = t.xx + t.yy + t.zz;
  t.flipped_sum = -t.xx - t.yy + t.zz;
  t.bound_xz = 0.5 * (t.xx + t.zz);
  t.bound_yz = 0.5 * (-t.yy + t.zz);
  t.fidelity = 0.25 * (1.0 + t.xx - t.yy + t.zz);
  if (t.sum > 1.0 + 1e-9 || t.flipped_sum > 1.0 + 1e-9)
    throw ChannelConsistencyError("Bell-diagonal positivity violated");
  return t;
}

}  // namespace selftest::extraction
