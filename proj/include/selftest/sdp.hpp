#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "selftest/linalg.hpp"

// Dense primal-dual interior-point solver for linear matrix inequalities.
//
// A problem optimizes c^T v + offset over v subject to F0 + sum_k v_k F_k >= 0. Internally this is the
// dual of the standard form  min <C, X>  s.t. <A_k, X> = b_k, X >= 0  with C = F0, A_k = -F_k and b = c
// (maximize) or b = -c (minimize); X is the certificate used by certified_bound.
namespace selftest::sdp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Sense { maximize, minimize };

struct SdpProblem {
  int dim = 0;
  SparseMatrix F0;
  std::vector<SparseMatrix> F;
  VectorXd c;
  double offset = 0.0;
  Sense sense = Sense::maximize;
  /// A priori bound |v_k| <= variable_bound on every feasible point (1 for moment variables).
  double variable_bound = std::numeric_limits<double>::infinity();

  int num_vars() const { return static_cast<int>(F.size()); }
  /// Throws std::invalid_argument on size mismatch, asymmetry above 1e-12 or an all-zero F_k.
  void validate() const;
};

// near_optimal: progress stopped (rounding, or no interior at the optimum) with all residuals <= sqrt(tol).
enum class Status { optimal, near_optimal, max_iterations, infeasible_suspected, stalled };

const char* to_string(Status s);

struct SdpSolution {
  Status status = Status::max_iterations;
  VectorXd v;             // optimizer (moment side)
  MatrixXd X;             // certificate, PSD
  MatrixXd Z;             // F0 + sum v_k F_k at the final iterate
  double objective = 0.0;          // c^T v + offset
  double certificate_value = 0.0;  // <C, X> mapped to the objective's sign convention, plus offset
  double gap = 0.0;                // relative duality gap
  double primal_residual = 0.0;    // ||b - A(X)|| / (1 + ||b||)
  double dual_residual = 0.0;      // ||F0 + sum v_k F_k - Z||_F / (1 + ||F0||_F)
  int iterations = 0;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  bool verbose = false;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mehrotra predictor-corrector with the HKM direction. Deterministic.
SdpSolution solve(const SdpProblem& p, const SolverOptions& opt = {});

struct CertifiedBound {
  double value = 0.0;  // upper bound (maximize) or lower bound (minimize) on the optimum
  double slack = 0.0;  // value minus the reported objective, in the bound's direction
};

/// Bound from the certificate: X is shifted by its most negative eigenvalue to make it PSD, and the
/// remaining equality residuals are charged against variable_bound. Throws NumericalError when the
/// residuals are not finite or the correction is unbounded.
CertifiedBound certified_bound(const SdpSolution& sol, const SdpProblem& p);

/// [[Re H, -Im H], [Im H, Re H]]; PSD iff H is, with every eigenvalue doubled.
MatrixXd hermitian_embed(const linalg::Matrix& h);

/// Plain-text dumps for regression snapshots.
void dump(std::ostream& os, const SdpProblem& p);
void dump(std::ostream& os, const SdpSolution& s);

}  // namespace selftest::sdp
