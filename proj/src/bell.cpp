#include "selftest/bell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace selftest::bell {

using linalg::cplx;
using linalg::kron;
using linalg::Pauli;
using linalg::pauli;
using linalg::Vector;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

double angle_distance(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

Matrix id(Eigen::Index d) { return Matrix::Identity(d, d); }

// Eigenvectors of `m` grouped into clusters of numerically equal eigenvalues.
struct Cluster {
  double value;
  Matrix vectors;
};

std::vector<Cluster> eigen_clusters(const Matrix& m, double gap) {
  const auto ed = linalg::hermitian_eig(m, 1e-7);
  std::vector<Cluster> out;
  Eigen::Index start = 0;
  const Eigen::Index n = ed.values.size();
  for (Eigen::Index k = 1; k <= n; ++k) {
    if (k == n || ed.values(k) - ed.values(k - 1) > gap) {
      const Eigen::Index len = k - start;
      out.push_back({ed.values.segment(start, len).mean(), ed.vectors.middleCols(start, len)});
      start = k;
    }
  }
  return out;
}

void check_observable(const Matrix& o, Eigen::Index d, const char* name) {
  if (o.rows() != d || o.cols() != d)
    throw linalg::DimensionError(std::string("observable ") + name + " has wrong dimension");
  const auto hc = linalg::check_hermitian(o);
  if (!hc.accepted()) throw linalg::NotHermitianError(hc.max_asymmetry);
  if (linalg::operator_norm(o) > 1.0 + 1e-9)
    throw InvalidRealizationError(std::string("observable ") + name + " has operator norm above 1");
}

}  // namespace

BellFunctional::BellFunctional(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument(
        "alpha must lie in (0, 2); at the endpoints the local bound 4 max{1, alpha} equals the quantum "
        "value 4 + alpha^2 and the functional certifies nothing");
}

double BellFunctional::theta() const { return std::asin(alpha_ / 2.0); }

double BellFunctional::coefficient(int x, int y) const {
  static constexpr int sign[3][3] = {{1, 1, 1}, {1, 1, -1}, {1, -1, 0}};
  const double weight = (x == 2 || y == 2) ? alpha_ : 1.0;
  return sign[x][y] * weight;
}

double BellFunctional::classical_value() const { return 4.0 * std::max(1.0, alpha_); }
double BellFunctional::quantum_value() const { return 4.0 + alpha_ * alpha_; }

double classical_value_bruteforce(const BellFunctional& f) {
  double best = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 64; ++mask) {
    std::array<int, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = (mask >> k) & 1 ? -1 : 1;
      b[k] = (mask >> (k + 3)) & 1 ? -1 : 1;
    }
    double v = 0.0;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) v += f.coefficient(x, y) * a[x] * b[y];
    best = std::max(best, v);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Realization

Matrix Realization::reduced_A() const { return linalg::partial_trace(state, dimA, dimB, linalg::Party::A); }
Matrix Realization::reduced_B() const { return linalg::partial_trace(state, dimA, dimB, linalg::Party::B); }
Matrix Realization::lift_A(const Matrix& a) const { return kron(a, id(dimB)); }
Matrix Realization::lift_B(const Matrix& b) const { return kron(id(dimA), b); }

bool Realization::projective(double tol) const {
  for (const auto& o : A)
    if (!linalg::is_involution(o, tol)) return false;
  for (const auto& o : B)
    if (!linalg::is_involution(o, tol)) return false;
  return true;
}

Realization make_realization(std::array<Matrix, 3> A, std::array<Matrix, 3> B, Matrix state,
                             SupportCheck support) {
  Realization r;
  r.dimA = static_cast<int>(A[0].rows());
  r.dimB = static_cast<int>(B[0].rows());
  static constexpr const char* namesA[3] = {"A0", "A1", "A2"};
  static constexpr const char* namesB[3] = {"B0", "B1", "B2"};
  for (int k = 0; k < 3; ++k) {
    check_observable(A[k], r.dimA, namesA[k]);
    check_observable(B[k], r.dimB, namesB[k]);
  }
  const Eigen::Index d = Eigen::Index(r.dimA) * r.dimB;
  if (state.rows() != d || state.cols() != d) throw linalg::DimensionError("state dimension does not match dA*dB");
  const double tr = state.trace().real();
  if (std::abs(tr - 1.0) > 1e-9 || std::abs(state.trace().imag()) > 1e-9)
    throw InvalidRealizationError("state must have unit trace");
  const double lmin = linalg::min_eigenvalue(state);
  if (lmin < -1e-9) throw linalg::NotPsdError(lmin);
  r.A = std::move(A);
  r.B = std::move(B);
  r.state = std::move(state);
  if (support == SupportCheck::require_full_rank) {
    const double ma = linalg::min_eigenvalue(r.reduced_A());
    const double mb = linalg::min_eigenvalue(r.reduced_B());
    if (ma <= 1e-10 || mb <= 1e-10)
      throw RankDeficientError("reduced state is not full rank; restrict the local spaces with truncate_support");
  }
  return r;
}

Realization make_realization(std::array<Matrix, 3> A, std::array<Matrix, 3> B, const Vector& psi,
                             SupportCheck support) {
  return make_realization(std::move(A), std::move(B), linalg::projector(psi / psi.norm()), support);
}

Realization truncate_support(const Realization& r, double tol) {
  auto support_basis = [tol](const Matrix& rho) {
    const auto ed = linalg::hermitian_eig(rho);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < ed.values.size(); ++k)
      if (ed.values(k) > tol) keep.push_back(k);
    Matrix v(rho.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = ed.vectors.col(keep[k]);
    return v;
  };
  const Matrix va = support_basis(r.reduced_A());
  const Matrix vb = support_basis(r.reduced_B());
  std::array<Matrix, 3> A, B;
  for (int k = 0; k < 3; ++k) {
    A[k] = va.adjoint() * r.A[k] * va;
    B[k] = vb.adjoint() * r.B[k] * vb;
  }
  const Matrix v = kron(va, vb);
  Matrix rho = v.adjoint() * r.state * v;
  rho /= rho.trace().real();
  return make_realization(std::move(A), std::move(B), Matrix(0.5 * (rho + rho.adjoint())));
}

Realization with_state(const Realization& r, const Matrix& state) {
  return make_realization(r.A, r.B, state, SupportCheck::skip);
}

Matrix isotropic_state(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  return (1.0 - eta) * linalg::projector(linalg::phi_plus()) + eta * id(4) / 4.0;
}

// ---------------------------------------------------------------------------
// Bell operator and SOS

Matrix bell_operator(const BellFunctional& f, const Realization& r) {
  const double a = f.alpha();
  const auto& A = r.A;
  const auto& B = r.B;
  return kron(A[0], B[0] + B[1] + a * B[2]) + kron(A[1], B[0] + B[1] - a * B[2]) + a * kron(A[2], B[0] - B[1]);
}

double bell_value(const BellFunctional& f, const Realization& r) {
  return linalg::expectation(bell_operator(f, r), r.state);
}

std::array<Matrix, 3> sos_operators(const BellFunctional& f, const Realization& r) {
  const double a = f.alpha();
  const auto& A = r.A;
  const auto& B = r.B;
  return {r.lift_A(A[0] + A[1]) - r.lift_B(B[0] + B[1]), r.lift_A(A[0] - A[1]) - a * r.lift_B(B[2]),
          a * r.lift_A(A[2]) - r.lift_B(B[0] - B[1])};
}

double sos_residual(const BellFunctional& f, const Realization& r) {
  const double a2 = f.alpha() * f.alpha();
  const auto& A = r.A;
  const auto& B = r.B;
  Matrix rhs = r.lift_A(2.0 * A[0] * A[0] + 2.0 * A[1] * A[1] + a2 * A[2] * A[2]) +
               r.lift_B(2.0 * B[0] * B[0] + 2.0 * B[1] * B[1] + a2 * B[2] * B[2]);
  for (const auto& l : sos_operators(f, r)) rhs -= l * l;
  return (2.0 * bell_operator(f, r) - rhs).norm();
}

// ---------------------------------------------------------------------------
// Ideal realizations and the two-qubit family

namespace {

struct QubitFamily {
  std::array<Matrix, 3> A;
  std::array<Matrix, 3> B;
};

QubitFamily qubit_family(const BellFunctional& f, double u, double v) {
  const double c = std::cos(f.theta());
  const double s = std::sin(f.theta());
  const Matrix X = pauli(Pauli::X), Y = pauli(Pauli::Y), Z = pauli(Pauli::Z);
  const Matrix bobAxis = -std::cos(v) * Y + std::sin(v) * Z;
  return {{c * X + s * Z, c * X - s * Z, std::cos(u) * Y + std::sin(u) * Z},
          {c * X + s * bobAxis, c * X - s * bobAxis, Z}};
}

}  // namespace

Realization ideal_realization(const BellFunctional& f, double u) {
  auto fam = qubit_family(f, u, u);
  return make_realization(std::move(fam.A), std::move(fam.B), linalg::phi_plus());
}

Realization block_realization(const BellFunctional& f, const std::vector<double>& angles,
                              const std::vector<double>& weights) {
  if (angles.empty() || angles.size() != weights.size())
    throw std::invalid_argument("block_realization: angles and weights must be non-empty and of equal length");
  const int k = static_cast<int>(angles.size());
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("block_realization: negative weight");
    total += w;
  }
  std::array<Matrix, 3> A, B;
  for (int x = 0; x < 3; ++x) {
    A[x] = Matrix::Zero(2 * k, 2 * k);
    B[x] = Matrix::Zero(2 * k, 2 * k);
  }
  for (int j = 0; j < k; ++j) {
    const auto fam = qubit_family(f, angles[j], angles[j]);
    Matrix proj = Matrix::Zero(k, k);
    proj(j, j) = 1.0;
    for (int x = 0; x < 3; ++x) {
      A[x] += kron(fam.A[x], proj);
      B[x] += kron(fam.B[x], proj);
    }
  }
  // Registers A' A'' B' B''; block j carries Phi+ on A'B' and |j>|j> on A''B''.
  const int d = 2 * k;
  Matrix rho = Matrix::Zero(d * d, d * d);
  for (int j = 0; j < k; ++j) {
    Vector psi = Vector::Zero(d * d);
    for (int q = 0; q < 2; ++q) psi((q * k + j) * d + (q * k + j)) = 1.0 / std::sqrt(2.0);
    rho += (weights[j] / total) * linalg::projector(psi);
  }
  return make_realization(std::move(A), std::move(B), std::move(rho));
}

Matrix r_operator(const BellFunctional& f, double u, double v) {
  auto fam = qubit_family(f, u, v);
  Realization r;
  r.dimA = r.dimB = 2;
  r.A = std::move(fam.A);
  r.B = std::move(fam.B);
  return bell_operator(f, r);
}

double r_max_eigenvalue(const BellFunctional& f, double u, double v) {
  const double a2 = f.alpha() * f.alpha();
  // |cos| keeps the expression 2pi-periodic in u - v.
  return 4.0 + a2 * (2.0 * std::abs(std::cos((u - v) / 2.0)) - 1.0);
}

// ---------------------------------------------------------------------------
// Correlators

double CorrelatorTable::bell_value(const BellFunctional& f) const {
  double v = 0.0;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) v += f.coefficient(x, y) * corr[x][y];
  return v;
}

double CorrelatorTable::max_abs_difference(const CorrelatorTable& o) const {
  double m = 0.0;
  for (int k = 0; k < 3; ++k) {
    m = std::max({m, std::abs(marginalA[k] - o.marginalA[k]), std::abs(marginalB[k] - o.marginalB[k])});
    for (int y = 0; y < 3; ++y) m = std::max(m, std::abs(corr[k][y] - o.corr[k][y]));
  }
  return m;
}

CorrelatorTable correlators(const BellFunctional& f, double u) {
  const double a = f.alpha();
  const double q = a * a / 4.0;
  const double su = std::sin(u);
  CorrelatorTable t;
  t.corr[0][0] = t.corr[1][1] = 1.0 - q * (1.0 - su);
  t.corr[0][1] = t.corr[1][0] = 1.0 - q * (1.0 + su);
  t.corr[0][2] = t.corr[2][0] = a / 2.0;
  t.corr[1][2] = t.corr[2][1] = -a / 2.0;
  t.corr[2][2] = su;
  return t;
}

CorrelatorTable measure_correlators(const Realization& r) {
  CorrelatorTable t;
  const Matrix rhoA = r.reduced_A();
  const Matrix rhoB = r.reduced_B();
  for (int x = 0; x < 3; ++x) {
    t.marginalA[x] = linalg::expectation(r.A[x], rhoA);
    t.marginalB[x] = linalg::expectation(r.B[x], rhoB);
    for (int y = 0; y < 3; ++y) t.corr[x][y] = linalg::expectation(kron(r.A[x], r.B[y]), r.state);
  }
  return t;
}

void write_csv(std::ostream& os, const CorrelatorTable& t) {
  const auto old = os.precision(17);
  os << "x,y,value\n";
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) os << x << ',' << y << ',' << t.corr[x][y] << '\n';
  for (int x = 0; x < 3; ++x) os << x << ",-," << t.marginalA[x] << '\n';
  for (int y = 0; y < 3; ++y) os << "-," << y << ',' << t.marginalB[y] << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Optimality conditions

double OptimalityReport::max_deviation() const {
  double m = std::max({anticomm01_deviation, anticomm2_deviation, bob_anticomm01_deviation, bob_anticomm2_deviation});
  for (int k = 0; k < 3; ++k) {
    m = std::max({m, std::abs(alice_second_moment[k] - 1.0), std::abs(bob_second_moment[k] - 1.0), sos_norm[k]});
  }
  return m;
}

OptimalityReport optimality_conditions(const BellFunctional& f, const Realization& r, double tol) {
  const Matrix rhoA = r.reduced_A();
  const Matrix rhoB = r.reduced_B();
  if (linalg::min_eigenvalue(rhoA) <= tol || linalg::min_eigenvalue(rhoB) <= tol)
    throw RankDeficientError(
        "optimality conditions need full-rank reduced states; apply truncate_support to the realization first");
  OptimalityReport rep;
  for (int k = 0; k < 3; ++k) {
    rep.alice_second_moment[k] = linalg::expectation(r.A[k] * r.A[k], rhoA);
    rep.bob_second_moment[k] = linalg::expectation(r.B[k] * r.B[k], rhoB);
  }
  const Matrix sqrtRho = linalg::psd_sqrt(r.state);
  const auto L = sos_operators(f, r);
  for (int j = 0; j < 3; ++j) rep.sos_norm[j] = (L[j] * sqrtRho).norm();
  const double target = 2.0 - f.alpha() * f.alpha();
  const auto& A = r.A;
  const auto& B = r.B;
  rep.anticomm01_deviation = linalg::operator_norm(linalg::anticommutator(A[0], A[1]) - target * id(r.dimA));
  rep.anticomm2_deviation = linalg::operator_norm(linalg::anticommutator(A[0] + A[1], A[2]));
  rep.bob_anticomm01_deviation = linalg::operator_norm(linalg::anticommutator(B[0], B[1]) - target * id(r.dimB));
  rep.bob_anticomm2_deviation = linalg::operator_norm(linalg::anticommutator(B[0] + B[1], B[2]));
  return rep;
}

// ---------------------------------------------------------------------------
// Jordan decomposition

std::vector<double> BlockAngles::angles() const {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.theta);
  return out;
}

BlockAngles jordan_angles(const Matrix& r0, const Matrix& s0, double tol) {
  if (r0.rows() != s0.rows() || r0.cols() != s0.cols()) throw linalg::DimensionError("jordan_angles: size mismatch");
  if (!linalg::is_involution(r0, tol) || !linalg::is_involution(s0, tol))
    throw std::invalid_argument("jordan_angles: inputs must be Hermitian involutions");
  const Eigen::Index d = r0.rows();
  // {R,S}/2 commutes with R and S and equals cos(2 theta) on every block.
  const Matrix k = 0.5 * linalg::anticommutator(r0, s0);
  BlockAngles out;
  out.basis = Matrix::Zero(d, d);
  Eigen::Index col = 0;
  for (const auto& cl : eigen_clusters(k, 1e-6)) {
    const double c = std::clamp(cl.value, -1.0, 1.0);
    const Matrix rr = cl.vectors.adjoint() * r0 * cl.vectors;
    const auto red = linalg::hermitian_eig(rr, 1e-6);
    if (std::abs(std::abs(c) - 1.0) <= 1e-6) {
      for (Eigen::Index m = 0; m < red.values.size(); ++m) {
        out.basis.col(col++) = cl.vectors * red.vectors.col(m);
        out.blocks.push_back({c > 0 ? 0.0 : std::numbers::pi / 2.0, 1, red.values(m) >= 0 ? 1 : -1});
      }
      continue;
    }
    const Eigen::Index half = cl.vectors.cols() / 2;
    if (cl.vectors.cols() % 2 != 0 || red.values(half - 1) > 0.0 || red.values(half) < 0.0)
      throw std::runtime_error("jordan_angles: inconsistent block structure");
    const double sin2 = std::sqrt(1.0 - c * c);
    const double theta = 0.5 * std::acos(c);
    for (Eigen::Index m = half; m < cl.vectors.cols(); ++m) {
      const linalg::Vector v = cl.vectors * red.vectors.col(m);
      linalg::Vector w = (s0 * v - c * v) / sin2;
      w.normalize();
      out.basis.col(col++) = v;
      out.basis.col(col++) = w;
      out.blocks.push_back({theta, 2, 1});
    }
  }
  return out;
}

std::pair<Matrix, Matrix> reconstruct(const BlockAngles& b) {
  const Eigen::Index d = b.basis.rows();
  Matrix r = Matrix::Zero(d, d), s = Matrix::Zero(d, d);
  Eigen::Index at = 0;
  for (const auto& blk : b.blocks) {
    const double c = std::cos(2.0 * blk.theta);
    if (blk.size == 1) {
      r(at, at) = double(blk.sign);
      s(at, at) = c * blk.sign;
      ++at;
      continue;
    }
    const double sn = std::sin(2.0 * blk.theta);
    r.block(at, at, 2, 2) = pauli(Pauli::Z);
    s.block(at, at, 2, 2) = c * pauli(Pauli::Z) + sn * pauli(Pauli::X);
    at += 2;
  }
  return {b.basis * r * b.basis.adjoint(), b.basis * s * b.basis.adjoint()};
}

// ---------------------------------------------------------------------------
// Characterization of optimal projective realizations

namespace {

struct LocalForm {
  Matrix basis;  // columns: |q>|j>, q-major
  std::vector<double> angles;
  double error = 0.0;
};

// Basis in which zhat = Z (x) 1 and xhat = X (x) 1.
Matrix qubit_basis(const Matrix& zhat, const Matrix& xhat, double tol) {
  const Eigen::Index d = zhat.rows();
  if (d % 2 != 0) throw std::invalid_argument("characterize: local dimension must be even at maximal violation");
  if (!linalg::is_involution(zhat, tol) || !linalg::is_involution(xhat, tol) ||
      linalg::anticommutator(zhat, xhat).norm() > tol * d)
    throw std::invalid_argument("characterize: observables do not satisfy the optimal anticommutation relations");
  const auto ed = linalg::hermitian_eig(zhat, tol);
  const Eigen::Index half = d / 2;
  Matrix u(d, d);
  for (Eigen::Index k = 0; k < half; ++k) {
    const linalg::Vector e = ed.vectors.col(half + k);
    u.col(k) = e;
    u.col(half + k) = xhat * e;
  }
  return u;
}

// Common eigenbasis of commuting Hermitian (ty, tz) with ty^2 + tz^2 = 1; angle = atan2(sz * tz, sy * ty).
std::pair<Matrix, std::vector<double>> circle_decomposition(const Matrix& ty, const Matrix& tz, double sy) {
  const Eigen::Index d = ty.rows();
  Matrix g(d, d);
  std::vector<double> angles;
  Eigen::Index col = 0;
  for (const auto& cl : eigen_clusters(ty, 1e-7)) {
    const auto inner = linalg::hermitian_eig(cl.vectors.adjoint() * tz * cl.vectors, 1e-6);
    for (Eigen::Index m = 0; m < inner.values.size(); ++m) {
      g.col(col++) = cl.vectors * inner.vectors.col(m);
      angles.push_back(wrap_angle(std::atan2(inner.values(m), sy * cl.value)));
    }
  }
  return {g, angles};
}

Matrix qubit_component(const Matrix& op, Pauli p, Eigen::Index rest) {
  return 0.5 * linalg::partial_trace(kron(pauli(p), id(rest)) * op, 2, static_cast<int>(rest), linalg::Party::B);
}

}  // namespace

Characterization characterize(const BellFunctional& f, const Realization& r, double tol) {
  if (!r.projective(tol)) throw std::invalid_argument("characterize: realization must be projective");
  const double c = std::cos(f.theta());
  const double s = std::sin(f.theta());
  const Matrix X = pauli(Pauli::X), Y = pauli(Pauli::Y), Z = pauli(Pauli::Z);

  // Alice: (A0 + A1)/2c -> X, (A0 - A1)/2s -> Z, A2 -> sum_j (cos u_j Y + sin u_j Z) (x) |a_j><a_j|.
  const Matrix ua = qubit_basis((r.A[0] - r.A[1]) / (2 * s), (r.A[0] + r.A[1]) / (2 * c), tol);
  const Eigen::Index ka = r.dimA / 2;
  const Matrix a2 = ua.adjoint() * r.A[2] * ua;
  auto [ga, uAngles] = circle_decomposition(qubit_component(a2, Pauli::Y, ka), qubit_component(a2, Pauli::Z, ka), 1.0);
  const Matrix wa = ua * kron(id(2), ga);

  // Bob: B2 -> Z, (B0 + B1)/2c -> X, (B0 - B1)/2s -> sum_k (-cos v_k Y + sin v_k Z) (x) |b_k><b_k|.
  const Matrix ub = qubit_basis(r.B[2], (r.B[0] + r.B[1]) / (2 * c), tol);
  const Eigen::Index kb = r.dimB / 2;
  const Matrix db = ub.adjoint() * ((r.B[0] - r.B[1]) / (2 * s)) * ub;
  auto [gb, vAngles] = circle_decomposition(qubit_component(db, Pauli::Y, kb), qubit_component(db, Pauli::Z, kb), -1.0);
  const Matrix wb = ub * kron(id(2), gb);

  Characterization out;
  out.alice_angles = uAngles;
  out.bob_angles = vAngles;

  std::array<Matrix, 3> formA, formB;
  for (auto& m : formA) m = Matrix::Zero(r.dimA, r.dimA);
  for (auto& m : formB) m = Matrix::Zero(r.dimB, r.dimB);
  for (Eigen::Index j = 0; j < ka; ++j) {
    Matrix p = Matrix::Zero(ka, ka);
    p(j, j) = 1.0;
    const double u = uAngles[j];
    formA[0] += kron(c * X + s * Z, p);
    formA[1] += kron(c * X - s * Z, p);
    formA[2] += kron(std::cos(u) * Y + std::sin(u) * Z, p);
  }
  for (Eigen::Index k = 0; k < kb; ++k) {
    Matrix p = Matrix::Zero(kb, kb);
    p(k, k) = 1.0;
    const Matrix axis = -std::cos(vAngles[k]) * Y + std::sin(vAngles[k]) * Z;
    formB[0] += kron(c * X + s * axis, p);
    formB[1] += kron(c * X - s * axis, p);
    formB[2] += kron(Z, p);
  }
  for (int x = 0; x < 3; ++x) {
    out.reconstruction_error = std::max(out.reconstruction_error, (wa.adjoint() * r.A[x] * wa - formA[x]).norm());
    out.reconstruction_error = std::max(out.reconstruction_error, (wb.adjoint() * r.B[x] * wb - formB[x]).norm());
  }

  const Matrix w = kron(wa, wb);
  const Matrix rho = w.adjoint() * r.state * w;
  auto index = [&](Eigen::Index qa, Eigen::Index j, Eigen::Index qb, Eigen::Index k) {
    return (qa * ka + j) * r.dimB + (qb * kb + k);
  };
  out.block_weights.assign(ka, std::vector<double>(kb, 0.0));
  for (Eigen::Index j = 0; j < ka; ++j) {
    for (Eigen::Index k = 0; k < kb; ++k) {
      double weight = 0.0;
      for (int qa = 0; qa < 2; ++qa)
        for (int qb = 0; qb < 2; ++qb) weight += rho(index(qa, j, qb, k), index(qa, j, qb, k)).real();
      out.block_weights[j][k] = weight;
      if (angle_distance(uAngles[j], vAngles[k]) > tol) out.mismatched_weight += weight;
      double fid = 0.0;
      for (int q = 0; q < 2; ++q)
        for (int q2 = 0; q2 < 2; ++q2) fid += rho(index(q, j, q, k), index(q2, j, q2, k)).real();
      out.qubit_fidelity += 0.5 * fid;
    }
  }
  return out;
}

}  // namespace selftest::bell
