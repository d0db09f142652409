#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <sstream>

#include "selftest/certify.hpp"
#include "selftest/extraction.hpp"
#include "selftest/random.hpp"

using namespace selftest;
using npa::Monomial;
using npa::Word;

namespace {

bell::Realization random_realization(random::Rng& rng, int da, int db) {
  std::array<linalg::Matrix, 3> A, B;
  for (int k = 0; k < 3; ++k) {
    A[k] = random::involution(rng, da);
    B[k] = random::involution(rng, db);
  }
  return bell::make_realization(A, B, random::density(rng, da * db));
}

// Alice's observables pairwise commuting where requested: shared eigenbasis for the pair (0, 1).
bell::Realization commuting_realization(random::Rng& rng, int da, int db) {
  auto r = random_realization(rng, da, db);
  const linalg::Matrix u = random::unitary(rng, da);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int k = 0; k < 2; ++k) {
    linalg::Matrix d = linalg::Matrix::Zero(da, da);
    for (int i = 0; i < da; ++i) d(i, i) = coin(rng) ? 1.0 : -1.0;
    r.A[k] = u * d * u.adjoint();
  }
  return bell::make_realization(r.A, r.B, r.state);
}

}  // namespace

TEST_CASE("word canonicalization") {
  CHECK(npa::canonicalize(Word{0, 0}).empty());
  CHECK(npa::canonicalize(Word{0, 1, 1, 0}).empty());
  CHECK(npa::canonicalize(Word{1, 0}) == Word{1, 0});
  CHECK(npa::canonicalize(Word{1, 0}, {{0, 1}}) == Word{0, 1});
  CHECK(npa::canonicalize(Word{1, 0, 1}, {{0, 1}}) == Word{0});
  CHECK(npa::canonicalize(Word{2, 0, 1, 0, 2}, {{0, 2}}) == Word{0, 2, 1, 0, 2});
  CHECK(npa::canonicalize(Word{2, 0, 1, 0, 2}, {{0, 2}, {1, 2}}) == Word{0, 1, 0});
  CHECK(npa::canonicalize(Word{2, 1, 0, 1, 2}) == Word{2, 1, 0, 1, 2});
  CHECK(npa::to_string(Word{2, 1}, 'A') == "A2A1");
  CHECK(npa::to_string(Word{}, 'B').empty());
  CHECK(npa::to_string(Monomial{{}, {}}) == "1");

  SUBCASE("idempotent on random words") {
    random::Rng rng(11);
    std::uniform_int_distribution<int> letter(0, 2), len(0, 8), mask(0, 7);
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    for (int n = 0; n < 10000; ++n) {
      Word w(static_cast<std::size_t>(len(rng)));
      for (auto& c : w) c = letter(rng);
      npa::PairSet comm;
      const int m = mask(rng);
      for (int k = 0; k < 3; ++k)
        if (m & (1 << k)) comm.insert(pairs[static_cast<std::size_t>(k)]);
      const Word c = npa::canonicalize(w, comm);
      REQUIRE(npa::canonicalize(c, comm) == c);
      REQUIRE(c.size() <= w.size());
      for (std::size_t i = 1; i < c.size(); ++i) REQUIRE(c[i] != c[i - 1]);
    }
  }

  SUBCASE("rewriting preserves the operator") {
    random::Rng rng(12);
    std::uniform_int_distribution<int> letter(0, 2), len(0, 7);
    for (int n = 0; n < 300; ++n) {
      const auto r = commuting_realization(rng, 4, 2);
      Word w(static_cast<std::size_t>(len(rng)));
      for (auto& c : w) c = letter(rng);
      const auto lhs = npa::word_operator(w, r.A);
      REQUIRE((lhs - npa::word_operator(npa::canonicalize(w, {{0, 1}}), r.A)).norm() < 1e-10);
      REQUIRE((lhs - npa::word_operator(npa::canonicalize(w), r.A)).norm() < 1e-10);
    }
  }
}

TEST_CASE("basis and skeleton structure") {
  CHECK(npa::build_basis(npa::Level::one_plus_ab).size() == 16);
  CHECK(npa::build_basis(npa::Level::one_plus_ab, 2).size() == 9);
  CHECK(npa::build_basis(npa::Level::swap).size() == 100);

  for (auto level : {npa::Level::one_plus_ab, npa::Level::swap}) {
    const auto sk = npa::build_skeleton(npa::build_basis(level));
    CHECK(sk.duplicates_removed() == 0);
    CHECK(sk.classes().front().rep.identity());
    for (int i = 0; i < sk.size(); ++i) CHECK(sk.cell(i, i).cls == 0);
    for (int i = 0; i < sk.size(); ++i)
      for (int j = 0; j < sk.size(); ++j) {
        REQUIRE(sk.cell(i, j).cls == sk.cell(j, i).cls);
        if (sk.cell(i, j).cls != 0 && !sk.classes()[static_cast<std::size_t>(sk.cell(i, j).cls)].self_adjoint)
          REQUIRE(sk.cell(i, j).conjugated != sk.cell(j, i).conjugated);
      }
  }

  SUBCASE("shared class") {
    const auto basis = npa::build_basis(npa::Level::one_plus_ab);
    const auto sk = npa::build_skeleton(basis);
    const auto idx = [&](const Monomial& m) {
      return static_cast<int>(std::find(basis.begin(), basis.end(), m) - basis.begin());
    };
    // A0^dagger A1 and (A0 B0)^dagger (A1 B0) are both <A0 A1>.
    const auto c1 = sk.cell(idx({{0}, {}}), idx({{1}, {}}));
    const auto c2 = sk.cell(idx({{0}, {0}}), idx({{1}, {0}}));
    CHECK(c1.cls == c2.cls);
    CHECK(c1.conjugated == c2.conjugated);
  }

  SUBCASE("deterministic") {
    std::ostringstream a, b;
    npa::build_skeleton(npa::build_basis(npa::Level::swap)).dump(a);
    npa::build_skeleton(npa::build_basis(npa::Level::swap)).dump(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("row,col,class_id,conjugated\n", 0) == 0);
    const std::string text = a.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 100 * 100);
  }

  SUBCASE("duplicates under commutation are dropped") {
    const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap), {{{0, 1}}, {}});
    // A1A0 coincides with A0A1, once per Bob factor.
    CHECK(sk.duplicates_removed() == 10);
    CHECK(sk.size() == 90);
  }
}

TEST_CASE("representability") {
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap));
  const auto basis = sk.basis();
  const auto idx = [&](const Monomial& m) {
    return static_cast<int>(std::find(basis.begin(), basis.end(), m) - basis.begin());
  };
  // C_Y needs A2A1A0A1 (x) B0B1: row A1A2 (x) B0, column A0A1 (x) B1.
  const Monomial target = npa::canonicalize(Monomial{{2, 1, 0, 1}, {0, 1}});
  const auto found = sk.find(target);
  REQUIRE(found.has_value());
  const auto cell = sk.cell(idx({{1, 2}, {0}}), idx({{0, 1}, {1}}));
  CHECK(cell.cls == found->cls);
  CHECK_NOTHROW(npa::poly_to_moments(certify::cy_polynomial(), sk));
  CHECK_NOTHROW(npa::poly_to_moments(certify::cz_polynomial(), sk));

  npa::OperatorPolynomial deg5;
  deg5.terms.push_back({1.0, Monomial{{2, 1, 0, 1, 2}, {}}});
  try {
    npa::poly_to_moments(deg5, sk);
    FAIL("degree-5 word accepted");
  } catch (const npa::UnrepresentableError& e) {
    CHECK(e.word() == "A2A1A0A1A2");
  }
  CHECK_THROWS_AS(npa::poly_to_moments(certify::cy_polynomial(), npa::build_skeleton(npa::build_basis(npa::Level::one_plus_ab))),
                  npa::UnrepresentableError);
}

TEST_CASE("true moments of realizations") {
  random::Rng rng(21);
  for (auto level : {npa::Level::one_plus_ab, npa::Level::swap}) {
    const auto sk = npa::build_skeleton(npa::build_basis(level));
    for (int n = 0; n < 20; ++n) {
      const auto r = random_realization(rng, 2 + n % 2, 2 + (n / 2) % 2);
      const auto y = npa::true_class_values(sk, r);
      const auto gamma = npa::true_moment_matrix(sk, r);
      REQUIRE((npa::moment_matrix(sk, y) - gamma).norm() < 1e-10);
      REQUIRE(linalg::min_eigenvalue(gamma) > -1e-10);
      REQUIRE(std::abs(y[0] - 1.0) < 1e-12);
    }
  }

  SUBCASE("polynomial evaluation agrees with operators") {
    const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap));
    const bell::BellFunctional f(std::numbers::sqrt2);
    for (int n = 0; n < 20; ++n) {
      const auto r = random_realization(rng, 2, 2);
      const auto y = npa::true_class_values(sk, r);
      CHECK(std::abs(npa::poly_to_moments(npa::bell_polynomial(f), sk).evaluate(y).real() - bell::bell_value(f, r)) <
            1e-10);
      const auto c = extraction::c_operators(r);
      const auto rho = r.state;
      CHECK(std::abs(npa::poly_to_moments(certify::cy_polynomial(), sk).evaluate(y) - linalg::expectation(c.cY, rho)) <
            1e-10);
      CHECK(std::abs(npa::evaluate(certify::cz_polynomial(), r) - linalg::expectation(c.cZ, rho)) < 1e-10);
    }
  }

  SUBCASE("commuting realizations fit the constrained skeleton") {
    const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap), {{{0, 1}}, {}});
    for (int n = 0; n < 10; ++n) {
      const auto r = commuting_realization(rng, 4, 2);
      const auto gamma = npa::true_moment_matrix(sk, r);
      REQUIRE((npa::moment_matrix(sk, npa::true_class_values(sk, r)) - gamma).norm() < 1e-10);
    }
  }
}

TEST_CASE("commutation only merges classes") {
  const auto basis = npa::build_basis(npa::Level::one_plus_ab);
  const std::vector<npa::PairSet> chain{{}, {{0, 1}}, {{0, 1}, {0, 2}}, {{0, 1}, {0, 2}, {1, 2}}};
  std::vector<npa::MomentSkeleton> sks;
  for (const auto& p : chain) sks.push_back(npa::build_skeleton(basis, {p, {}}));
  for (std::size_t k = 1; k < sks.size(); ++k) {
    REQUIRE(sks[k].size() == sks[k - 1].size());
    CHECK(sks[k].classes().size() <= sks[k - 1].classes().size());
    const int n = sks[k].size();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int i2 = 0; i2 < n; ++i2)
          for (int j2 = 0; j2 < n; ++j2)
            if (sks[k - 1].cell(i, j).cls == sks[k - 1].cell(i2, j2).cls)
              REQUIRE(sks[k].cell(i, j).cls == sks[k].cell(i2, j2).cls);
  }
}
