#pragma once

#include <array>
#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selftest/bell.hpp"
#include "selftest/linalg.hpp"

// Moment matrices for products of binary observables A_x (x) B_y with A_x^2 = B_y^2 = 1.
namespace selftest::npa {

using linalg::cplx;
using linalg::Matrix;

/// Setting indices of one party's operator string, leftmost first.
using Word = std::vector<int>;

/// Unordered pairs of settings whose observables are declared to commute.
using PairSet = std::set<std::pair<int, int>>;

struct Commutation {
  PairSet alice;
  PairSet bob;

  bool empty() const { return alice.empty() && bob.empty(); }
  static Commutation none() { return {}; }
};

/// Canonical word: shortest, then lexicographically smallest, among all words reachable by cancelling
/// adjacent repeats and swapping adjacent commuting letters. Idempotent.
Word canonicalize(const Word& w, const PairSet& commuting = {});

std::string to_string(const Word& w, char party);

struct Monomial {
  Word a;
  Word b;

  auto operator<=>(const Monomial&) const = default;
  bool identity() const { return a.empty() && b.empty(); }
};

Monomial canonicalize(const Monomial& m, const Commutation& c = {});
/// Canonical form of m^dagger (both words reversed).
Monomial adjoint(const Monomial& m, const Commutation& c = {});
std::string to_string(const Monomial& m);

enum class Level { one_plus_ab, swap };

/// one_plus_ab: {1, A_x, B_y, A_x B_y}; swap: {1, A_x, A_x A_x'} (x) {1, B_y, B_y B_y'} with x != x'.
/// Ordering: identity, single letters by index, then ordered pairs lexicographically.
std::vector<Monomial> build_basis(Level level, int settings = 3);

struct Cell {
  int cls = 0;
  bool conjugated = false;  // cell value is the complex conjugate of the class value
};

struct MomentClass {
  Monomial rep;        // min(m, m^dagger)
  bool self_adjoint;   // rep == rep^dagger, so the class value is real
  int count = 0;       // number of cells
  int row = -1, col = -1;  // first cell (row-major) holding rep itself
};

class MomentSkeleton {
 public:
  MomentSkeleton(std::vector<Monomial> basis, Commutation comm);

  int size() const { return static_cast<int>(basis_.size()); }
  const std::vector<Monomial>& basis() const { return basis_; }
  const Commutation& commutation() const { return comm_; }
  const std::vector<MomentClass>& classes() const { return classes_; }
  const Cell& cell(int i, int j) const { return cells_[static_cast<std::size_t>(i) * basis_.size() + j]; }
  /// Class of a canonical monomial, if it occurs in some cell.
  std::optional<Cell> find(const Monomial& m) const;
  /// Basis entries dropped because they coincide with an earlier entry after canonicalization.
  int duplicates_removed() const { return dropped_; }

  /// `row,col,class_id,conjugated`.
  void dump(std::ostream& os) const;

 private:
  std::vector<Monomial> basis_;
  Commutation comm_;
  std::vector<Cell> cells_;
  std::vector<MomentClass> classes_;
  std::map<Monomial, int> index_;
  int dropped_ = 0;
};

/// Canonicalizes the basis, drops repeated entries (which would force a singular moment matrix) and
/// assigns every cell basis[i]^dagger basis[j] to its class. Class 0 is the identity.
MomentSkeleton build_skeleton(const std::vector<Monomial>& basis, const Commutation& comm = {});

/// Linear combination of one party's words.
struct PartyPolynomial {
  std::vector<std::pair<cplx, Word>> terms;

  static PartyPolynomial one();
  static PartyPolynomial letter(int x);
  PartyPolynomial& operator+=(const PartyPolynomial& o);
  PartyPolynomial& operator-=(const PartyPolynomial& o);
  PartyPolynomial& operator*=(cplx s);
  friend PartyPolynomial operator+(PartyPolynomial p, const PartyPolynomial& q) { return p += q; }
  friend PartyPolynomial operator-(PartyPolynomial p, const PartyPolynomial& q) { return p -= q; }
  friend PartyPolynomial operator*(cplx s, PartyPolynomial p) { return p *= s; }
  /// Concatenation product.
  friend PartyPolynomial operator*(const PartyPolynomial& p, const PartyPolynomial& q);
};

PartyPolynomial commutator(const PartyPolynomial& p, const PartyPolynomial& q);

struct OperatorPolynomial {
  std::vector<std::pair<cplx, Monomial>> terms;

  OperatorPolynomial& operator+=(const OperatorPolynomial& o);
  OperatorPolynomial& operator*=(cplx s);
  friend OperatorPolynomial operator+(OperatorPolynomial p, const OperatorPolynomial& q) { return p += q; }
  friend OperatorPolynomial operator*(cplx s, OperatorPolynomial p) { return p *= s; }

  /// Canonical terms with duplicates merged and zero coefficients dropped.
  OperatorPolynomial canonical(const Commutation& c = {}) const;
};

/// p (x) q.
OperatorPolynomial tensor(const PartyPolynomial& p, const PartyPolynomial& q);

OperatorPolynomial bell_polynomial(const bell::BellFunctional& f);
/// <A0B0> + <A0B1> + <A1B0> - <A1B1>.
OperatorPolynomial chsh_polynomial();
/// <A_x> or <B_y>.
OperatorPolynomial marginal_polynomial(linalg::Party party, int setting);

class UnrepresentableError : public std::invalid_argument {
 public:
  UnrepresentableError(const std::string& word)
      : std::invalid_argument("monomial " + word + " does not occur in the moment matrix"), word_(word) {}
  const std::string& word() const { return word_; }

 private:
  std::string word_;
};

/// sum_c direct[c] y_c + conj[c] conj(y_c) over class values y.
struct MomentFunctional {
  std::vector<cplx> direct;
  std::vector<cplx> conj;

  cplx evaluate(const std::vector<cplx>& y) const;
  /// True when all coefficients are real after merging each class with its conjugate.
  bool real_coefficients(double tol = 1e-12) const;
};

/// Throws UnrepresentableError naming the first term that is not a cell of the skeleton.
MomentFunctional poly_to_moments(const OperatorPolynomial& p, const MomentSkeleton& sk);

/// Operator of a word: product of the given observables, leftmost first.
Matrix word_operator(const Word& w, const std::array<Matrix, 3>& obs);

/// <m_rep> for every class on a concrete realization.
std::vector<cplx> true_class_values(const MomentSkeleton& sk, const bell::Realization& r);
/// Gamma(i,j) = tr(rho basis_i^dagger basis_j), computed from operators without canonicalization.
Matrix true_moment_matrix(const MomentSkeleton& sk, const bell::Realization& r);
/// Moment matrix assembled from class values.
Matrix moment_matrix(const MomentSkeleton& sk, const std::vector<cplx>& y);

/// Expectation of an operator polynomial evaluated directly on a realization.
cplx evaluate(const OperatorPolynomial& p, const bell::Realization& r);

}  // namespace selftest::npa
