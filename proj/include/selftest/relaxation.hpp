#pragma once

#include <vector>

#include "selftest/npa.hpp"
#include "selftest/sdp.hpp"

// Moment relaxations assembled into linear matrix inequalities.
namespace selftest::npa {

/// real: symmetric real moment matrix (valid whenever objective and constraints have real
/// coefficients, since averaging a Hermitian solution with its conjugate keeps every value);
/// complex: Hermitian moment matrix through the real embedding of twice the size.
enum class Field { real, complex };

struct LinearConstraint {
  MomentFunctional functional;  // real part is constrained
  double value = 0.0;
};

struct MomentProblem {
  const MomentSkeleton* skeleton = nullptr;
  Field field = Field::real;
  sdp::SdpProblem sdp;
  /// Full real moment coordinates w: for class c, w[re[c]] = Re y_c and w[im[c]] = Im y_c (-1 if absent).
  std::vector<int> re, im;
  int full_size = 0;
  std::vector<int> free;  // w index of each SDP variable
  struct Substitution {
    int index;
    double constant;
    std::vector<std::pair<int, double>> terms;
  };
  std::vector<Substitution> substitutions;  // in elimination order

  std::vector<cplx> class_values(const sdp::VectorXd& v) const;
};

/// Optimizes Re objective(y) over moment matrices Gamma(y) >= 0 with y_identity = 1 and each equality
/// constraint eliminated by substitution. Throws std::invalid_argument for complex coefficients in the
/// real field or for an equality with no variable part.
MomentProblem build_moment_problem(const MomentSkeleton& sk, Field field, const MomentFunctional& objective,
                                   sdp::Sense sense, const std::vector<LinearConstraint>& equalities = {});

struct MomentResult {
  sdp::SdpSolution solution;
  double value = 0.0;      // objective at the solver's moment vector
  double certified = 0.0;  // certified bound in the optimization direction
  std::vector<cplx> moments;
};

MomentResult solve_moment_problem(const MomentProblem& mp, const sdp::SolverOptions& opt = {});

}  // namespace selftest::npa
