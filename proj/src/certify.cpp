#include "selftest/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

namespace selftest::certify {

using linalg::Matrix;
using linalg::Pauli;
using linalg::pauli;
using npa::PartyPolynomial;

namespace {

const double kSqrt2 = std::numbers::sqrt2;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, n) on up to `jobs` threads; each index is handled exactly once.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::clamp(jobs, 1, std::max(n, 1)); ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

PartyPolynomial L(int x) { return PartyPolynomial::letter(x); }

// 3(R + S) - (SRS + RSR) in terms of letters r, s.
PartyPolynomial t_polynomial(int r, int s) {
  return 3.0 * (L(r) + L(s)) - (L(s) * L(r) * L(s) + L(r) * L(s) * L(r));
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

MarginalBound to_bound(const npa::MomentResult& r) {
  return {r.value, r.certified, r.solution.status};
}

npa::MomentResult solve_or_flag(const npa::MomentProblem& mp, const sdp::SolverOptions& opt) {
  try {
    return npa::solve_moment_problem(mp, opt);
  } catch (const sdp::NumericalError&) {
    npa::MomentResult r;
    r.solution.status = sdp::Status::stalled;
    r.value = r.certified = kNaN;
    return r;
  }
}

}  // namespace

const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::fidelity_vs_beta: return "fidelity-vs-beta";
    case CurveKind::marginal_vs_beta: return "marginal-vs-beta";
    case CurveKind::guessing_vs_eta: return "guessing-vs-eta";
  }
  return "unknown";
}

bool BoundCurve::all_converged() const {
  return std::all_of(points.begin(), points.end(), [](const CurvePoint& p) {
    return p.status == "optimal" || p.status == "near-optimal" || p.status == "analytic";
  });
}

void write_csv(std::ostream& os, const BoundCurve& c) {
  const auto old = os.precision(12);
  os << "x,y,status\n";
  for (const auto& p : c.points) os << p.x << ',' << p.y << ',' << p.status << '\n';
  os.precision(old);
}

npa::OperatorPolynomial cy_polynomial() {
  const PartyPolynomial a = npa::commutator(L(2), t_polynomial(0, 1));
  const PartyPolynomial b = npa::commutator(L(0), L(1));
  return (-1.0 / (16.0 * kSqrt2)) * npa::tensor(a, b);
}

npa::OperatorPolynomial cz_polynomial() {
  const PartyPolynomial b = 3.0 * (L(0) - L(1)) - (L(1) * L(0) * L(1) - L(0) * L(1) * L(0));
  return (1.0 / (4.0 * kSqrt2)) * npa::tensor(L(2), b);
}

BoundCurve fidelity_curve(const std::vector<double>& t_grid, const StudyOptions& opt) {
  const auto ts = sorted_unique(t_grid);
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::swap));
  const bell::BellFunctional f(kSqrt2);
  npa::OperatorPolynomial objective = (-1.0) * cy_polynomial();
  objective += cz_polynomial();
  const auto obj = npa::poly_to_moments(objective, sk);
  const auto beta = npa::poly_to_moments(npa::bell_polynomial(f), sk);

  BoundCurve curve{CurveKind::fidelity_vs_beta, "swap", opt.solver.tol, {}};
  curve.points.resize(ts.size());
  parallel_for(static_cast<int>(ts.size()), opt.jobs, [&](int i) {
    const auto mp = npa::build_moment_problem(sk, opt.field, obj, sdp::Sense::minimize, {{beta, ts[static_cast<std::size_t>(i)]}});
    const auto r = solve_or_flag(mp, opt.solver);
    curve.points[static_cast<std::size_t>(i)] = {ts[static_cast<std::size_t>(i)], 0.5 * r.certified, sdp::to_string(r.solution.status)};
  });
  return curve;
}

MarginalBound max_marginal(double beta0, int x, double alpha, const npa::Commutation& comm, const StudyOptions& opt) {
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::one_plus_ab), comm);
  const auto obj = npa::poly_to_moments(npa::marginal_polynomial(linalg::Party::A, x), sk);
  const auto beta = npa::poly_to_moments(npa::bell_polynomial(bell::BellFunctional(alpha)), sk);
  const auto mp = npa::build_moment_problem(sk, opt.field, obj, sdp::Sense::maximize, {{beta, beta0}});
  return to_bound(solve_or_flag(mp, opt.solver));
}

BoundCurve marginal_curve(const std::vector<double>& beta_grid, int x, double alpha, const StudyOptions& opt) {
  const auto bs = sorted_unique(beta_grid);
  BoundCurve curve{CurveKind::marginal_vs_beta, "1+AB", opt.solver.tol, {}};
  curve.points.resize(bs.size());
  StudyOptions inner = opt;
  inner.jobs = 1;
  parallel_for(static_cast<int>(bs.size()), opt.jobs, [&](int i) {
    const auto b = max_marginal(bs[static_cast<std::size_t>(i)], x, alpha, {}, inner);
    curve.points[static_cast<std::size_t>(i)] = {bs[static_cast<std::size_t>(i)], b.certified, sdp::to_string(b.status)};
  });
  return curve;
}

std::vector<FeasiblePoint> tilted_points(int x, const std::vector<double>& r_grid, const std::vector<double>& u_grid,
                                         double alpha) {
  const bell::BellFunctional f(alpha);
  std::vector<FeasiblePoint> out;
  for (double u : u_grid) {
    const auto real = bell::ideal_realization(f, u);
    const Matrix w = bell::bell_operator(f, real);
    const Matrix ax = real.lift_A(real.A[x]);
    for (double r : r_grid) {
      if (r < 0) throw std::invalid_argument("tilt must be non-negative");
      const auto ed = linalg::hermitian_eig(r * ax + w);
      const auto top = ed.values.size() - 1;
      const linalg::Vector psi = ed.vectors.col(top);
      const Matrix rho = linalg::projector(psi);
      out.push_back({linalg::expectation(w, rho), linalg::expectation(ax, rho), r, u,
                     ed.values(top) - ed.values(top - 1) < 1e-9});
    }
  }
  return out;
}

std::vector<FeasiblePoint> upper_hull(std::vector<FeasiblePoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const FeasiblePoint& a, const FeasiblePoint& b) {
    return a.beta != b.beta ? a.beta < b.beta : a.marginal < b.marginal;
  });
  std::vector<FeasiblePoint> hull;
  const auto cross = [](const FeasiblePoint& o, const FeasiblePoint& a, const FeasiblePoint& b) {
    return (a.beta - o.beta) * (b.marginal - o.marginal) - (a.marginal - o.marginal) * (b.beta - o.beta);
  };
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0) hull.pop_back();
    if (!hull.empty() && hull.back().beta == p.beta) hull.pop_back();
    hull.push_back(p);
  }
  return hull;
}

std::vector<FeasiblePoint> feasible_points(int x, const std::vector<double>& r_grid, const std::vector<double>& u_grid,
                                           double alpha) {
  return upper_hull(tilted_points(x, r_grid, u_grid, alpha));
}

double hull_value(const std::vector<FeasiblePoint>& hull, double beta) {
  if (hull.empty() || beta < hull.front().beta || beta > hull.back().beta) return -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < hull.size(); ++k)
    if (beta <= hull[k].beta) {
      const auto& a = hull[k - 1];
      const auto& b = hull[k];
      const double t = (beta - a.beta) / (b.beta - a.beta);
      return a.marginal + t * (b.marginal - a.marginal);
    }
  return hull.back().marginal;
}

bell::Realization deterministic_a2_witness() {
  const auto w = commutation_witnesses().front().realization;
  // Exchange the parties: the functional is symmetric under A_x <-> B_x.
  const Matrix swap = [] {
    Matrix s = Matrix::Zero(4, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s(2 * i + j, 2 * j + i) = 1.0;
    return s;
  }();
  return bell::make_realization(w.B, w.A, Matrix(swap * w.state * swap), bell::SupportCheck::skip);
}

double guessing_probability(double marginal_bound) { return std::clamp(0.5 * (1.0 + marginal_bound), 0.5, 1.0); }

double chsh_guessing_analytic(double s) {
  if (s <= 2.0) return 1.0;
  return 0.5 + 0.5 * std::sqrt(std::max(0.0, 2.0 - s * s / 4.0));
}

MarginalBound chsh_max_marginal(double s, const StudyOptions& opt) {
  const auto sk = npa::build_skeleton(npa::build_basis(npa::Level::one_plus_ab, 2));
  const auto obj = npa::poly_to_moments(npa::marginal_polynomial(linalg::Party::A, 0), sk);
  const auto chsh = npa::poly_to_moments(npa::chsh_polynomial(), sk);
  const auto mp = npa::build_moment_problem(sk, opt.field, obj, sdp::Sense::maximize, {{chsh, s}});
  return to_bound(solve_or_flag(mp, opt.solver));
}

namespace {

bell::Realization chsh_realization(double eta) {
  const Matrix z = pauli(Pauli::Z), x = pauli(Pauli::X), one = linalg::identity(2);
  return bell::make_realization({z, x, one}, {Matrix((z + x) / kSqrt2), Matrix((z - x) / kSqrt2), one},
                                bell::isotropic_state(eta), bell::SupportCheck::skip);
}

}  // namespace

NoiseComparison guessing_vs_noise(const std::vector<double>& eta_grid, const StudyOptions& opt) {
  const auto etas = sorted_unique(eta_grid);
  for (double e : etas)
    if (e < 0.0 || e > 1.0) throw std::invalid_argument("noise parameter must lie in [0, 1]");
  const bell::BellFunctional f(1.0);
  const auto ideal = bell::ideal_realization(f, std::numbers::pi / 2);

  NoiseComparison nc;
  nc.ours = {CurveKind::guessing_vs_eta, "1+AB", opt.solver.tol, {}};
  nc.chsh = {CurveKind::guessing_vs_eta, "analytic", 0.0, {}};
  nc.chsh_numeric = {CurveKind::guessing_vs_eta, "1+AB", opt.solver.tol, {}};
  const auto n = etas.size();
  nc.ours.points.resize(n);
  nc.chsh.points.resize(n);
  nc.chsh_numeric.points.resize(n);
  StudyOptions inner = opt;
  inner.jobs = 1;
  parallel_for(static_cast<int>(n), opt.jobs, [&](int i) {
    const double eta = etas[static_cast<std::size_t>(i)];
    const double beta = bell::bell_value(f, bell::with_state(ideal, bell::isotropic_state(eta)));
    const auto ours = max_marginal(beta, 0, 1.0, {}, inner);
    nc.ours.points[static_cast<std::size_t>(i)] = {eta, guessing_probability(ours.certified), sdp::to_string(ours.status)};

    const double s = npa::evaluate(npa::chsh_polynomial(), chsh_realization(eta)).real();
    nc.chsh.points[static_cast<std::size_t>(i)] = {eta, chsh_guessing_analytic(s), "analytic"};
    const auto num = chsh_max_marginal(s, inner);
    nc.chsh_numeric.points[static_cast<std::size_t>(i)] = {eta, guessing_probability(num.certified), sdp::to_string(num.status)};
  });
  return nc;
}

std::vector<CommutationRow> commutation_rows() {
  const double two_sqrt5 = 2.0 * std::sqrt(5.0);
  const double three_sqrt6 = (2.0 + 3.0 * std::sqrt(6.0)) / 2.0;
  const auto row = [](std::string label, npa::PairSet pairs, double ref) {
    return CommutationRow{std::move(label), npa::Commutation{std::move(pairs), {}}, ref};
  };
  return {
      row("[A0,A1]=0", {{0, 1}}, two_sqrt5),
      row("[A0,A2]=0", {{0, 2}}, three_sqrt6),
      row("[A1,A2]=0", {{1, 2}}, three_sqrt6),
      row("[A0,A2]=[A1,A2]=0", {{0, 2}, {1, 2}}, three_sqrt6),
      row("[A0,A1]=[A0,A2]=0", {{0, 1}, {0, 2}}, 4.163),
      row("[A0,A1]=[A1,A2]=0", {{0, 1}, {1, 2}}, 4.163),
  };
}

std::vector<CommutationRow> commutation_maxima(npa::Level level, const StudyOptions& opt) {
  auto rows = commutation_rows();
  const StudyOptions& inner = opt;
  parallel_for(static_cast<int>(rows.size()), opt.jobs, [&](int i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    const auto sk = npa::build_skeleton(npa::build_basis(level), row.constraint);
    const auto obj = npa::poly_to_moments(npa::bell_polynomial(bell::BellFunctional(1.0)), sk);
    const auto mp = npa::build_moment_problem(sk, inner.field, obj, sdp::Sense::maximize);
    const auto r = solve_or_flag(mp, inner.solver);
    row.value = r.value;
    row.certified = r.certified;
    row.status = r.solution.status;
  });
  return rows;
}

std::vector<Witness> commutation_witnesses() {
  const Matrix X = pauli(Pauli::X), Z = pauli(Pauli::Z), one = linalg::identity(2);
  const double s5 = std::sqrt(5.0), s15 = std::sqrt(15.0);
  const auto phi = linalg::phi_plus();
  const bell::BellFunctional f(1.0);
  const auto comm_norm = [](const Matrix& a, const Matrix& b) { return linalg::frobenius_norm(linalg::commutator(a, b)); };

  std::vector<Witness> out;
  {
    Witness w;
    w.label = "[A0,A1]=0";
    w.realization = bell::make_realization({X, X, Z}, {Matrix((2 * X + Z) / s5), Matrix((2 * X - Z) / s5), one}, phi,
                                           bell::SupportCheck::skip);
    w.expected_beta = 2.0 * s5;
    const auto& r = w.realization;
    w.commutators = {{"[A0,A1]", comm_norm(r.A[0], r.A[1])},
                     {"[B0,B2]", comm_norm(r.B[0], r.B[2])},
                     {"[B1,B2]", comm_norm(r.B[1], r.B[2])}};
    out.push_back(std::move(w));
  }
  const Matrix a1 = (X + s15 * Z) / 4.0;
  const Matrix b0 = (9.0 * X + s15 * Z) / (4.0 * std::sqrt(6.0));
  const Matrix b2 = (std::sqrt(3.0) * X - s5 * Z) / (2.0 * kSqrt2);
  {
    Witness w;
    w.label = "[A0,A2]=0";
    w.realization = bell::make_realization({X, a1, X}, {b0, a1, b2}, phi, bell::SupportCheck::skip);
    w.expected_beta = (2.0 + 3.0 * std::sqrt(6.0)) / 2.0;
    w.commutators = {{"[A0,A2]", comm_norm(w.realization.A[0], w.realization.A[2])}};
    out.push_back(std::move(w));
  }
  {
    Witness w;
    w.label = "[A1,A2]=0";
    w.realization = bell::make_realization({a1, X, X}, {b0, a1, Matrix(-b2)}, phi, bell::SupportCheck::skip);
    w.expected_beta = (2.0 + 3.0 * std::sqrt(6.0)) / 2.0;
    w.commutators = {{"[A1,A2]", comm_norm(w.realization.A[1], w.realization.A[2])}};
    out.push_back(std::move(w));
  }
  for (auto& w : out) w.beta = bell::bell_value(f, w.realization);
  return out;
}

}  // namespace selftest::certify
