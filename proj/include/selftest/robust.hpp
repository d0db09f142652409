#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "selftest/bell.hpp"

// Analytic robustness bounds for the a = sqrt2 functional as functions of eps = 6 - beta.
namespace selftest::robust {

struct ObservableBounds {
  double projectivity = 1.0;  // lower bound on <A_x^2, rho_A>
  double anticomm01 = 0.0;    // upper bound on <{A0,A1}^2, rho_A>
  double anticomm2 = 0.0;     // upper bound on <{A0+A1,A2}^2, rho_A>
};

/// Throws std::invalid_argument for eps < 0.
ObservableBounds observable_bounds(double eps);

/// Every intermediate bound of the argument leading to the fidelity bound. Frobenius entries bound
/// ||O rho^{1/2}||_F; correlation and C_X/C_Z entries are lower bounds (raw, not clipped).
struct BoundChain {
  double eps = 0.0;
  double sos_frobenius = 0.0;         // ||L_j rho^{1/2}||_F
  double anticomm01_frobenius = 0.0;  // {A0,A1} (x) 1, and 1 (x) {B0,B1}
  double combined_frobenius = 0.0;    // ({A0,A1} + sqrt2 {A0+A1,A2}) (x) 1
  double anticomm2_frobenius = 0.0;   // {A0+A1,A2} (x) 1
  double corr_diff = 0.0;             // <(A0-A1) (x) B2> and <A2 (x) (B0-B1)>
  double corr_sum = 0.0;              // <(A0+A1) (x) (B0+B1)>
  double cx = 0.0;
  double cz = 0.0;
  double fidelity = 0.0;              // (cx + cz)/2, unclipped
};

/// Composes the chain from its elementary steps and asserts that it reproduces the printed constants
/// (std::logic_error otherwise). Throws std::invalid_argument for eps < 0.
BoundChain bound_chain(double eps);

/// 1 - (18 + 11 sqrt2) sqrt(eps) / 4, clipped below at 0.
double fidelity_bound(double eps);
double fidelity_bound_raw(double eps);

/// Largest eps for which the fidelity bound exceeds 1/2: 4 / (18 + 11 sqrt2)^2.
double nontrivial_threshold();
/// Same threshold in terms of the isotropic noise parameter (eps = 6 eta).
double isotropic_threshold();

enum class Direction { upper, lower };

struct BoundEntry {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  Direction direction = Direction::upper;
  bool satisfied = false;
  /// Signed distance to violation: positive when satisfied.
  double margin() const { return direction == Direction::upper ? bound - measured : measured - bound; }
};

/// Absolute floating-point allowance used in every comparison.
inline constexpr double kCompareTol = 1e-9;

struct EpsilonReport {
  double beta = 0.0;
  double epsilon = 0.0;  // 6 - beta as measured; bounds use max(epsilon, 0)
  bool projective = false;
  std::vector<BoundEntry> entries;

  bool all_satisfied() const;
  const BoundEntry* find(const std::string& name) const;
};

class BellValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Measures every bounded quantity on r (a = sqrt2) and compares with its bound at eps = 6 - beta.
/// Projectivity and sum-of-squares entries are always reported; entries whose derivation uses A_x^2 = 1
/// are reported only for projective realizations. Throws BellValueError when beta > 6 + 1e-8.
EpsilonReport validate_all(const bell::Realization& r);

/// `bound_name,measured,bound,satisfied`.
void write_csv(std::ostream& os, const EpsilonReport& rep);

struct SweepOptions {
  std::uint64_t seed = 1;
  int trials = 200;
  int jobs = 1;
  bool projective = true;
};

struct SweepResult {
  int trials = 0;
  int violations = 0;
  double worst_margin = 0.0;
  std::string worst_entry;
  double min_beta = 0.0;
  double max_beta = 0.0;
};

/// Near-optimal realization: ideal block strategy on random local dimensions, perturbed observables and
/// state. Deterministic in (seed, index).
bell::Realization near_optimal_realization(std::uint64_t seed, int index, bool projective);

/// validate_all over `trials` realizations; results are independent of `jobs`.
SweepResult soundness_sweep(const SweepOptions& opt);

}  // namespace selftest::robust
