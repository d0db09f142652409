#include "selftest/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace selftest::linalg {

HermitianCheck check_hermitian(const Matrix& m, double tol) {
  HermitianCheck c;
  if (m.rows() != m.cols()) {
    c.max_asymmetry = std::numeric_limits<double>::infinity();
    return c;
  }
  c.max_asymmetry = (m - m.adjoint()).norm();
  c.tolerance = tol * std::max(1.0, m.norm());
  return c;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Matrix partial_trace(const Matrix& m, int dA, int dB, Party keep) {
  if (dA <= 0 || dB <= 0 || m.rows() != m.cols() || m.rows() != Eigen::Index(dA) * dB)
    throw DimensionError("partial_trace: matrix of size " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " does not match dims (" + std::to_string(dA) +
                         "," + std::to_string(dB) + ")");
  if (keep == Party::A) {
    Matrix out = Matrix::Zero(dA, dA);
    for (int i = 0; i < dA; ++i)
      for (int j = 0; j < dA; ++j) out(i, j) = m.block(i * dB, j * dB, dB, dB).trace();
    return out;
  }
  Matrix out = Matrix::Zero(dB, dB);
  for (int i = 0; i < dA; ++i) out += m.block(i * dB, i * dB, dB, dB);
  return out;
}

EigenDecomposition hermitian_eig(const Matrix& m, double tol) {
  const HermitianCheck c = check_hermitian(m, tol);
  if (!c.accepted()) throw NotHermitianError(c.max_asymmetry);
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

double max_eigenvalue(const Matrix& m, double tol) {
  const HermitianCheck c = check_hermitian(m, tol);
  if (!c.accepted()) throw NotHermitianError(c.max_asymmetry);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double min_eigenvalue(const Matrix& m, double tol) {
  const HermitianCheck c = check_hermitian(m, tol);
  if (!c.accepted()) throw NotHermitianError(c.max_asymmetry);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Norms norms(const Matrix& m) { return {frobenius_norm(m), operator_norm(m)}; }

Matrix psd_sqrt(const Matrix& m) {
  const EigenDecomposition ed = hermitian_eig(m);
  if (ed.values.size() > 0 && ed.values(0) < kPsdClip) throw NotPsdError(ed.values(0));
  const RealVector s = ed.values.cwiseMax(0.0).cwiseSqrt();
  return ed.vectors * s.cast<cplx>().asDiagonal() * ed.vectors.adjoint();
}

Matrix pauli(Pauli p) {
  Matrix m(2, 2);
  const cplx i(0.0, 1.0);
  switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, -i, i, 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

cplx inner(const Matrix& a, const Matrix& b) { return (a.adjoint() * b).trace(); }

double expectation(const Matrix& op, const Matrix& rho) {
  // tr(op * rho) without forming the product.
  return op.cwiseProduct(rho.transpose()).sum().real();
}

Vector phi_plus() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

Matrix projector(const Vector& psi) { return psi * psi.adjoint(); }

Matrix sign_projection(const Matrix& observable) {
  const EigenDecomposition ed = hermitian_eig(observable);
  RealVector s(ed.values.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) s(k) = ed.values(k) >= 0.0 ? 1.0 : -1.0;
  return ed.vectors * s.cast<cplx>().asDiagonal() * ed.vectors.adjoint();
}

bool is_involution(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return check_hermitian(m, tol).accepted() &&
         (m * m - Matrix::Identity(m.rows(), m.cols())).norm() <= tol * std::max<double>(1.0, m.rows());
}

}  // namespace selftest::linalg
