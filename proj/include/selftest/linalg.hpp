#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace selftest::linalg {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-9;
// Eigenvalues above this are treated as numerical zero when a PSD input is expected.
inline constexpr double kPsdClip = -1e-10;

enum class Party { A, B };

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotHermitianError : public std::runtime_error {
 public:
  explicit NotHermitianError(double asym)
      : std::runtime_error("matrix is not Hermitian (||M - M^dag||_F = " + std::to_string(asym) + ")"),
        max_asymmetry(asym) {}
  double max_asymmetry;
};

class NotPsdError : public std::runtime_error {
 public:
  explicit NotPsdError(double min_eig)
      : std::runtime_error("matrix is not positive semidefinite (min eigenvalue " + std::to_string(min_eig) + ")"),
        min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct HermitianCheck {
  double max_asymmetry = 0.0;
  double tolerance = 0.0;
  bool accepted() const { return max_asymmetry <= tolerance; }
};

/// Frobenius norm of M - M^dag against tol scaled by max(1, ||M||_F).
HermitianCheck check_hermitian(const Matrix& m, double tol = kHermitianTol);

Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(const Vector& a, const Vector& b);

/// Reduced operator on `keep` for an operator on C^dA (x) C^dB.
Matrix partial_trace(const Matrix& m, int dA, int dB, Party keep);

struct EigenDecomposition {
  RealVector values;  // ascending
  Matrix vectors;     // columns
};

/// Throws NotHermitianError when check_hermitian(m, tol) fails.
EigenDecomposition hermitian_eig(const Matrix& m, double tol = kHermitianTol);
double max_eigenvalue(const Matrix& m, double tol = kHermitianTol);
double min_eigenvalue(const Matrix& m, double tol = kHermitianTol);

struct Norms {
  double frobenius = 0.0;
  double op = 0.0;  // largest singular value
};
Norms norms(const Matrix& m);
double frobenius_norm(const Matrix& m);
double operator_norm(const Matrix& m);

/// Principal square root of a PSD matrix. Eigenvalues in [kPsdClip, 0) are clipped.
Matrix psd_sqrt(const Matrix& m);

enum class Pauli { I, X, Y, Z };
Matrix pauli(Pauli p);
inline Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

/// Hilbert-Schmidt inner product tr(a^dag b).
cplx inner(const Matrix& a, const Matrix& b);
/// Re tr(op * rho).
double expectation(const Matrix& op, const Matrix& rho);

Vector phi_plus();
Matrix projector(const Vector& psi);

/// Replaces every eigenvalue by its sign (zero maps to +1).
Matrix sign_projection(const Matrix& observable);

bool is_involution(const Matrix& m, double tol = 1e-8);

}  // namespace selftest::linalg
