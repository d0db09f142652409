#include "selftest/random.hpp"

namespace selftest::random {

using linalg::cplx;
using linalg::Matrix;

Matrix ginibre(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cplx(n(rng), n(rng));
  return g;
}

Matrix unitary(Rng& rng, int d) {
  const Matrix g = ginibre(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int k = 0; k < d; ++k) {
    const cplx diag = r(k, k);
    const double a = std::abs(diag);
    if (a > 0) q.col(k) *= diag / a;
  }
  return q;
}

Matrix hermitian(Rng& rng, int d) {
  const Matrix g = ginibre(rng, d, d);
  return 0.5 * (g + g.adjoint());
}

Matrix involution(Rng& rng, int d) {
  const Matrix u = unitary(rng, d);
  std::uniform_int_distribution<int> split(1, std::max(1, d - 1));
  const int plus = d >= 2 ? split(rng) : 1;
  linalg::RealVector s(d);
  for (int k = 0; k < d; ++k) s(k) = k < plus ? 1.0 : -1.0;
  return u * s.cast<cplx>().asDiagonal() * u.adjoint();
}

Matrix contraction(Rng& rng, int d) {
  const Matrix u = unitary(rng, d);
  std::uniform_real_distribution<double> ev(-1.0, 1.0);
  linalg::RealVector s(d);
  for (int k = 0; k < d; ++k) s(k) = ev(rng);
  return u * s.cast<cplx>().asDiagonal() * u.adjoint();
}

Matrix density(Rng& rng, int d, int rank) {
  if (rank <= 0 || rank > d) rank = d;
  const Matrix g = ginibre(rng, d, rank);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

linalg::Vector pure_state(Rng& rng, int d) {
  linalg::Vector v = ginibre(rng, d, 1).col(0);
  return v / v.norm();
}

}  // namespace selftest::random
