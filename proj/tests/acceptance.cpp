// One line per acceptance criterion; exit status is the number of failed criteria.
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "selftest/certify.hpp"
#include "selftest/extraction.hpp"
#include "selftest/random.hpp"
#include "selftest/robust.hpp"

using namespace selftest;
using linalg::Matrix;

namespace {

const double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
const std::vector<double> kAlphas{0.5, 1.0, kSqrt2, 1.9};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED(" << what << ") ";
    }
  }
};

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(a + (b - a) * k / (n - 1));
  return v;
}

bool converged(sdp::Status s) { return s == sdp::Status::optimal || s == sdp::Status::near_optimal; }

void quantum_value(Outcome& o) {
  double worst = 0.0;
  for (double a : kAlphas) {
    const bell::BellFunctional f(a);
    for (int k = 0; k < 32; ++k)
      worst = std::max(worst, std::abs(bell::bell_value(f, bell::ideal_realization(f, 2 * kPi * k / 32)) - (4 + a * a)));
  }
  o.require(worst <= 1e-9, "ideal realizations");
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap));
  const auto mp = npa::build_moment_problem(
      sk, npa::Field::real, npa::poly_to_moments(npa::bell_polynomial(bell::BellFunctional(1.0)), sk),
      sdp::Sense::maximize);
  const auto r = npa::solve_moment_problem(mp);
  o.require(converged(r.solution.status) && std::abs(r.value - 5.0) <= 1e-5, "swap-level SDP");
  o.detail << "ideal max dev " << worst << ", swap SDP " << r.value << " (certified " << r.certified << ")";
}

void classical_value(Outcome& o) {
  double worst = 0.0;
  for (int k = 1; k <= 19; ++k) {
    const double a = 0.1 * k;
    worst = std::max(worst, std::abs(bell::classical_value_bruteforce(bell::BellFunctional(a)) - 4 * std::max(1.0, a)));
  }
  o.require(worst <= 1e-12, "brute force");
  o.detail << "19 alphas in [0.1,1.9], max dev " << worst;
}

void sos_identity(Outcome& o) {
  random::Rng rng(301);
  double worst = 0.0;
  for (double a : kAlphas) {
    const bell::BellFunctional f(a);
    for (int n = 0; n < 100; ++n) {
      std::array<Matrix, 3> A, B;
      const int da = 2 + n % 3, db = 2 + (n / 3) % 3;
      for (int k = 0; k < 3; ++k) {
        A[k] = n % 2 ? random::involution(rng, da) : random::contraction(rng, da);
        B[k] = n % 2 ? random::involution(rng, db) : random::contraction(rng, db);
      }
      worst = std::max(worst, bell::sos_residual(f, bell::make_realization(A, B, random::density(rng, da * db))));
    }
  }
  o.require(worst <= 1e-9, "residual");
  o.detail << "400 realizations, max residual " << worst;
}

void lambda_max(Outcome& o) {
  double branch = 0.0, top = 0.0, fid = 1.0;
  bool iff = true;
  for (double a : kAlphas) {
    const bell::BellFunctional f(a);
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 24; ++j) {
        const double u = 2 * kPi * i / 24, v = 2 * kPi * j / 24;
        const auto ed = linalg::hermitian_eig(bell::r_operator(f, u, v));
        const double closed = bell::r_max_eigenvalue(f, u, v);
        double d = 1e300;
        for (int k = 0; k < 4; ++k) d = std::min(d, std::abs(ed.values(k) - closed));
        branch = std::max(branch, d);
        if (a <= kSqrt2) top = std::max(top, std::abs(ed.values(3) - closed));
        const bool attains = std::abs(ed.values(3) - (4 + a * a)) <= 1e-9;
        iff = iff && (attains == (i == j));
        if (i == j) fid = std::min(fid, std::norm(linalg::phi_plus().dot(ed.vectors.col(3))));
      }
  }
  o.require(branch <= 1e-9, "closed form in spectrum");
  o.require(top <= 1e-9, "closed form is top for a<=sqrt2");
  o.require(iff, "4+a^2 iff u=v");
  o.require(fid >= 1 - 1e-9, "Phi+ eigenvector");
  o.detail << "branch dev " << branch << ", top dev (a<=sqrt2) " << top << ", min fidelity " << fid;
}

// Swap circuit with the controlled-S replaced by its two Kraus operators.
Matrix kraus_a(const Matrix& r, const Matrix& s, const Matrix& rho, double& completeness) {
  const auto d = r.rows();
  const Matrix id = linalg::identity(d);
  Matrix v1(2 * d, d);
  v1 << id, r;
  v1 /= kSqrt2;
  Matrix h(2, 2);
  h << 1, 1, 1, -1;
  h /= kSqrt2;
  const Matrix w = linalg::kron(h, id) * v1;
  const Matrix p0 = linalg::projector(linalg::Vector::Unit(2, 0));
  const Matrix p1 = linalg::projector(linalg::Vector::Unit(2, 1));
  const Matrix k0 = linalg::kron(p0, id) + linalg::kron(p1, s);
  const Matrix k1 = linalg::kron(p1, linalg::psd_sqrt(id - s * s));
  const Matrix big = w * rho * w.adjoint();
  completeness =
      std::max(completeness, (k0.adjoint() * k0 + k1.adjoint() * k1 - linalg::identity(2 * d)).norm());
  return linalg::partial_trace(k0 * big * k0.adjoint() + k1 * big * k1.adjoint(), 2, static_cast<int>(d),
                               linalg::Party::A);
}

void channel_validity(Outcome& o) {
  random::Rng rng(501);
  double tnorm = 0.0, choi_b = 0.0, choi_a = 0.0, kraus = 0.0, complete = 0.0, tp = 0.0;
  for (int d : {2, 4, 6})
    for (int n = 0; n < 1000; ++n) {
      const Matrix r = random::involution(rng, d), s = random::involution(rng, d);
      const Matrix t = extraction::t_operator(r, s);
      tnorm = std::max(tnorm, linalg::operator_norm(t));
      const auto cb = extraction::choi(extraction::channel_b(r, s));
      choi_b = std::min(choi_b, cb.min_eigenvalue());
      const Matrix r2 = random::involution(rng, d);
      const auto ch = extraction::channel_a(r2, t);
      const auto ca = extraction::choi(ch);
      choi_a = std::min(choi_a, ca.min_eigenvalue());
      tp = std::max({tp, (ca.output_trace() - linalg::identity(d)).norm(), (cb.output_trace() - linalg::identity(d)).norm()});
      const Matrix rho = random::density(rng, d);
      kraus = std::max(kraus, (ch.apply(rho) - kraus_a(r2, t, rho, complete)).norm());
    }
  o.require(tnorm <= 1 + 1e-9, "T norm");
  o.require(choi_b >= -1e-9, "construction B Choi");
  o.require(choi_a >= -1e-9 && kraus <= 1e-10 && complete <= 1e-10 && tp <= 1e-10, "construction A CPTP");
  o.detail << "max ||T|| " << tnorm << ", min Choi B " << choi_b << ", min Choi A " << choi_a << ", Kraus dev "
           << kraus << ", trace dev " << tp;
}

void exact_extraction(Outcome& o) {
  const bell::BellFunctional f(kSqrt2);
  double worst = 0.0;
  for (int k = 0; k < 16; ++k)
    worst = std::max(worst, std::abs(1.0 - extraction::extraction_fidelity(bell::ideal_realization(f, 2 * kPi * k / 16))));
  o.require(worst <= 1e-9, "fidelity");
  o.detail << "16 angles, max |1-F| " << worst;
}

void fidelity_threshold(Outcome& o) {
  const bell::BellFunctional f(kSqrt2);
  const auto ideal = bell::ideal_realization(f, 0.7);
  bool sound = true;
  double worst_formula = 0.0;
  for (double eta : linspace(0.0, 1e-3, 21)) {
    const auto r = bell::with_state(ideal, bell::isotropic_state(eta));
    const double eps = 6.0 - bell::bell_value(f, r);
    const double fid = extraction::extraction_fidelity(r);
    worst_formula = std::max(worst_formula, std::abs(fid - (1 - 0.75 * eta)));
    sound = sound && fid >= robust::fidelity_bound(std::max(eps, 0.0)) - 1e-12;
  }
  const double eps_star = robust::nontrivial_threshold();
  const double eta_star = robust::isotropic_threshold();
  o.require(sound && worst_formula <= 1e-12, "isotropic soundness");
  o.require(eps_star >= 0.0035 && eps_star <= 0.0036, "eps*");
  o.require(std::abs(eta_star - 0.0006) <= 0.00005, "eta*");
  o.detail << "F = 1-3eta/4 to " << worst_formula << ", eps* " << eps_star << ", eta* " << 100 * eta_star << "%";
}

void fidelity_curve(Outcome& o) {
  certify::StudyOptions opt;
  opt.jobs = jobs();
  const auto c = certify::fidelity_curve(linspace(5.7, 6.0, 31), opt);
  bool mono = true;
  for (std::size_t k = 1; k < c.points.size(); ++k) mono = mono && c.points[k].y >= c.points[k - 1].y - 1e-6;
  const double f6 = c.points.back().y, f57 = c.points.front().y;
  o.require(c.all_converged(), "solver status");
  o.require(f6 >= 0.99, "t=6");
  o.require(std::abs(f57 - 0.5) <= 0.05, "t=5.7 within 0.5+-0.05");
  o.require(mono, "monotone");
  o.detail << "F(6) " << f6 << ", F(5.7) " << f57 << ", 31 points";
}

void randomness(Outcome& o) {
  const auto m5 = certify::max_marginal(5.0, 0);
  const auto m4 = certify::max_marginal(4.0, 0);
  o.require(converged(m5.status) && m5.certified <= 0.01, "A0 at beta=5");
  o.require(converged(m4.status) && std::abs(m4.certified - 1.0) <= 1e-6, "A0 at beta=4");
  certify::StudyOptions opt;
  opt.jobs = jobs();
  const double b25 = 2 * std::sqrt(5.0);
  const auto a2 = certify::marginal_curve(linspace(4.0, b25, 9), 2, 1.0, opt);
  double lowest = 1.0;
  for (const auto& p : a2.points) lowest = std::min(lowest, p.y);
  o.require(a2.all_converged() && lowest >= 1 - 1e-3, "A2 bound below 2sqrt5");
  const auto w = certify::deterministic_a2_witness();
  const double wb = bell::bell_value(bell::BellFunctional(1.0), w);
  const double wa = linalg::expectation(w.lift_A(w.A[2]), w.state);
  o.require(std::abs(wb - b25) <= 1e-9 && std::abs(wa - 1.0) <= 1e-9, "A2 witness");
  o.detail << "max<A0>(5) " << m5.certified << ", max<A0>(4) " << m4.certified << ", min max<A2> on [4,2sqrt5] "
           << lowest << ", witness beta " << wb << " <A2> " << wa;
}

void commutation(Outcome& o) {
  certify::StudyOptions opt;
  opt.jobs = jobs();
  const auto rows = certify::commutation_maxima(npa::Level::one_plus_ab, opt);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double tol = k < 4 ? 1e-3 : 1e-2;
    o.require(converged(rows[k].status) && std::abs(rows[k].certified - rows[k].reference) <= tol, rows[k].label);
    o.detail << rows[k].label << " " << rows[k].certified << " (ref " << rows[k].reference << "); ";
  }
  for (const auto& w : certify::commutation_witnesses()) {
    bool zero = true;
    for (const auto& c : w.commutators) zero = zero && c.second <= 1e-12;
    o.require(std::abs(w.beta - w.expected_beta) <= 1e-9 && zero, "witness " + w.label);
  }
  o.detail << "witnesses checked";
}

void chsh(Outcome& o) {
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::one_plus_ab, 2));
  const auto mp = npa::build_moment_problem(sk, npa::Field::real, npa::poly_to_moments(npa::chsh_polynomial(), sk),
                                            sdp::Sense::maximize);
  const auto r = npa::solve_moment_problem(mp);
  o.require(converged(r.solution.status) && std::abs(r.value - 2 * kSqrt2) <= 1e-5, "Tsirelson");
  certify::StudyOptions opt;
  opt.jobs = jobs();
  const auto nc = certify::guessing_vs_noise(linspace(0.0, 0.3, 41), opt);
  double worst = 0.0;
  for (std::size_t k = 0; k < nc.chsh.points.size(); ++k)
    worst = std::max(worst, std::abs(nc.chsh.points[k].y - nc.chsh_numeric.points[k].y));
  o.require(nc.chsh_numeric.all_converged() && worst <= 5e-3, "analytic curve");
  o.detail << "Tsirelson " << r.value << ", max |analytic - NPA| " << worst << " over 41 etas";
}

void soundness(Outcome& o) {
  for (bool projective : {true, false}) {
    robust::SweepOptions opt;
    opt.seed = 2024;
    opt.trials = 200;
    opt.jobs = jobs();
    opt.projective = projective;
    const auto s = robust::soundness_sweep(opt);
    o.require(s.violations == 0, projective ? "projective" : "non-projective");
    o.detail << (projective ? "projective" : "non-projective") << ": " << s.trials << " trials, " << s.violations
             << " violations, beta in [" << s.min_beta << ", " << s.max_beta << "], worst margin " << s.worst_margin
             << "; ";
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"quantum value", quantum_value},     {"classical value", classical_value},
      {"SOS identity", sos_identity},       {"lambda_max formula", lambda_max},
      {"channel validity", channel_validity}, {"exact extraction", exact_extraction},
      {"fidelity bound and threshold", fidelity_threshold}, {"swap-method fidelity curve", fidelity_curve},
      {"randomness", randomness},           {"commutation table", commutation},
      {"CHSH oracle", chsh},                {"bound soundness sweep", soundness},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
