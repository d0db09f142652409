#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "selftest/random.hpp"
#include "selftest/robust.hpp"

using namespace selftest;
using linalg::Matrix;

namespace {

const double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;

bell::BellFunctional sqrt2() { return bell::BellFunctional(kSqrt2); }

}  // namespace

TEST_CASE("observable bounds") {
  const auto zero = robust::observable_bounds(0.0);
  CHECK(zero.projectivity == 1.0);
  CHECK(zero.anticomm01 == 0.0);
  CHECK(zero.anticomm2 == 0.0);

  const double trivial = 1.0 / (3.0 + 2.0 * kSqrt2);
  CHECK(trivial == doctest::Approx(0.1716).epsilon(1e-3));
  CHECK(robust::observable_bounds(trivial).anticomm01 == doctest::Approx(4.0).epsilon(1e-14));

  CHECK(std::pow(2.0 * (1.0 + kSqrt2), 2) == doctest::Approx(4.0 * (3.0 + 2.0 * kSqrt2)).epsilon(1e-14));
  CHECK(std::pow(8.0 + 2.0 * kSqrt2, 2) == doctest::Approx(8.0 * (9.0 + 4.0 * kSqrt2)).epsilon(1e-14));

  CHECK_THROWS_AS(robust::observable_bounds(-1e-3), std::invalid_argument);

  double prev_p = 2.0, prev_a = -1.0, prev_b = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const auto t = robust::observable_bounds(0.01 * k);
    CHECK(t.projectivity < prev_p);
    CHECK(t.anticomm01 > prev_a);
    CHECK(t.anticomm2 > prev_b);
    prev_p = t.projectivity;
    prev_a = t.anticomm01;
    prev_b = t.anticomm2;
  }
}

TEST_CASE("bound chain") {
  SUBCASE("exact case") {
    const auto c = robust::bound_chain(0.0);
    CHECK(c.corr_diff == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(c.corr_sum == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(c.cx == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.cz == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.sos_frobenius == 0.0);
    CHECK(c.anticomm01_frobenius == 0.0);
    CHECK(c.anticomm2_frobenius == 0.0);
  }
  SUBCASE("constants reassemble the fidelity bound") {
    CHECK(0.5 * ((7.0 + 5.0 * kSqrt2) + 0.5 * (4.0 + kSqrt2)) ==
          doctest::Approx(0.25 * (18.0 + 11.0 * kSqrt2)).epsilon(1e-15));
    for (double eps : {1e-8, 1e-5, 1e-3, 0.01, 0.1, 1.0}) {
      const auto c = robust::bound_chain(eps);
      CHECK(c.fidelity == doctest::Approx(robust::fidelity_bound_raw(eps)).epsilon(1e-13));
      CHECK(c.anticomm01_frobenius * c.anticomm01_frobenius ==
            doctest::Approx(robust::observable_bounds(eps).anticomm01).epsilon(1e-13));
      CHECK(c.anticomm2_frobenius * c.anticomm2_frobenius ==
            doctest::Approx(robust::observable_bounds(eps).anticomm2).epsilon(1e-13));
    }
  }
  SUBCASE("numerical values") {
    const auto c = robust::bound_chain(0.0035);
    CHECK(c.cx == doctest::Approx(0.167).epsilon(2e-3));
    CHECK(c.cz == doctest::Approx(0.840).epsilon(1e-3));
    CHECK(c.corr_diff == doctest::Approx(kSqrt2 - std::sqrt(0.007)).epsilon(1e-14));
  }
  SUBCASE("monotone in eps") {
    auto prev = robust::bound_chain(0.0);
    for (int k = 1; k <= 200; ++k) {
      const auto c = robust::bound_chain(1e-4 * k);
      CHECK(c.sos_frobenius > prev.sos_frobenius);
      CHECK(c.anticomm01_frobenius > prev.anticomm01_frobenius);
      CHECK(c.anticomm2_frobenius > prev.anticomm2_frobenius);
      CHECK(c.corr_diff < prev.corr_diff);
      CHECK(c.corr_sum < prev.corr_sum);
      CHECK(c.cx < prev.cx);
      CHECK(c.cz < prev.cz);
      prev = c;
    }
  }
  CHECK_THROWS_AS(robust::bound_chain(-1.0), std::invalid_argument);
}

TEST_CASE("fidelity bound") {
  CHECK(robust::fidelity_bound(0.0) == 1.0);
  const double star = robust::nontrivial_threshold();
  CHECK(star == doctest::Approx(0.003552).epsilon(1e-3));
  CHECK(robust::fidelity_bound(star) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(robust::isotropic_threshold() == doctest::Approx(0.000592).epsilon(1e-3));
  CHECK(robust::isotropic_threshold() < 0.0006);
  CHECK(robust::fidelity_bound(0.5) == 0.0);
  CHECK(robust::fidelity_bound_raw(0.5) < 0.0);
  double prev = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double b = robust::fidelity_bound_raw(1e-4 * k);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("validation on ideal realizations") {
  const auto f = sqrt2();
  for (int k = 0; k < 8; ++k) {
    const auto rep = robust::validate_all(bell::ideal_realization(f, 2 * kPi * k / 8));
    CHECK(rep.projective);
    CHECK(rep.all_satisfied());
    CHECK(std::abs(rep.epsilon) <= 1e-12);
    CHECK(rep.entries.size() == 25);
    for (const auto& e : rep.entries) {
      INFO(e.name);
      CHECK(std::abs(e.margin()) <= 1e-9);
    }
  }
  const auto block = bell::block_realization(f, {0.3, 2.0, 4.4}, {0.5, 0.3, 0.2});
  const auto rep = robust::validate_all(block);
  CHECK(rep.all_satisfied());
  CHECK(rep.find("fidelity")->measured == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("validation under isotropic noise") {
  const auto ideal = bell::ideal_realization(sqrt2(), kPi / 2);
  for (double eta : {1e-4, 3e-4, 5e-4}) {
    const auto rep = robust::validate_all(bell::with_state(ideal, bell::isotropic_state(eta)));
    CHECK(rep.epsilon == doctest::Approx(6.0 * eta).epsilon(1e-9));
    CHECK(rep.all_satisfied());
    const auto* fid = rep.find("fidelity");
    REQUIRE(fid != nullptr);
    CHECK(fid->measured == doctest::Approx(1.0 - 0.75 * eta).epsilon(1e-12));
    CHECK(fid->measured >= robust::fidelity_bound(6.0 * eta));
  }
}

TEST_CASE("report format and errors") {
  const auto rep = robust::validate_all(bell::ideal_realization(sqrt2(), 0.0));
  std::ostringstream os;
  robust::write_csv(os, rep);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "bound_name,measured,bound,satisfied");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "true");
  }
  CHECK(rows == static_cast<int>(rep.entries.size()));

  bell::Realization bad = bell::ideal_realization(sqrt2(), 0.0);
  for (auto& a : bad.A) a *= 1.1;
  CHECK_THROWS_AS(robust::validate_all(bad), robust::BellValueError);

  random::Rng rng(3);
  std::array<Matrix, 3> A, B;
  for (int k = 0; k < 3; ++k) {
    A[k] = random::contraction(rng, 2);
    B[k] = random::contraction(rng, 2);
  }
  const auto np = robust::validate_all(bell::make_realization(A, B, random::density(rng, 4)));
  CHECK_FALSE(np.projective);
  CHECK(np.entries.size() == 10);
  CHECK(np.all_satisfied());
}

TEST_CASE("randomized soundness") {
  SUBCASE("near-optimal projective realizations") {
    const auto res = robust::soundness_sweep({.seed = 11, .trials = 200, .jobs = 1, .projective = true});
    INFO("worst entry " << res.worst_entry << " margin " << res.worst_margin);
    CHECK(res.violations == 0);
    CHECK(res.max_beta > 6.0 - 1e-4);
  }
  SUBCASE("near-optimal non-projective realizations") {
    const auto res = robust::soundness_sweep({.seed = 12, .trials = 200, .jobs = 1, .projective = false});
    CHECK(res.violations == 0);
  }
  SUBCASE("arbitrary projective realizations") {
    random::Rng rng(13);
    for (int n = 0; n < 100; ++n) {
      std::array<Matrix, 3> A, B;
      for (int k = 0; k < 3; ++k) {
        A[k] = random::involution(rng, 2 + n % 3);
        B[k] = random::involution(rng, 2 + n % 2);
      }
      const auto rep = robust::validate_all(
          bell::make_realization(A, B, random::density(rng, static_cast<int>(A[0].rows() * B[0].rows()))));
      CHECK(rep.all_satisfied());
    }
  }
  SUBCASE("independent of the number of workers") {
    const auto one = robust::soundness_sweep({.seed = 5, .trials = 12, .jobs = 1, .projective = true});
    const auto three = robust::soundness_sweep({.seed = 5, .trials = 12, .jobs = 3, .projective = true});
    CHECK(one.worst_margin == three.worst_margin);
    CHECK(one.min_beta == three.min_beta);
    CHECK(one.max_beta == three.max_beta);
  }
}
