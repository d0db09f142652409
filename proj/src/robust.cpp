#include "selftest/robust.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "selftest/extraction.hpp"
#include "selftest/random.hpp"

namespace selftest::robust {

using linalg::Matrix;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

void require_nonnegative(double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
}

void assert_identity(double lhs, double rhs, const char* what) {
  if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs)))
    throw std::logic_error(std::string("bound constants inconsistent: ") + what);
}

}  // namespace

ObservableBounds observable_bounds(double eps) {
  require_nonnegative(eps);
  return {1.0 - eps, 4.0 * (3.0 + 2.0 * kSqrt2) * eps, 8.0 * (9.0 + 4.0 * kSqrt2) * eps};
}

BoundChain bound_chain(double eps) {
  require_nonnegative(eps);
  const double r = std::sqrt(eps);
  BoundChain c;
  c.eps = eps;
  c.sos_frobenius = std::sqrt(2.0 * eps);

  // {A0,A1}: reverse triangle between the L_1 estimates multiplied by sqrt2 B2 and by (A0 - A1).
  const double l1_times_b2 = kSqrt2 * c.sos_frobenius;                 // 2 sqrt(eps)
  const double l1_times_a = 2.0 * c.sos_frobenius;                     // 2 sqrt(2 eps)
  c.anticomm01_frobenius = l1_times_b2 + l1_times_a;
  c.corr_diff = kSqrt2 - l1_times_b2 / kSqrt2;

  // (A0+A1)(B0+B1): L_0 multiplied by (B0 + B1), then remove {B0,B1}.
  c.corr_sum = 2.0 - (2.0 * c.sos_frobenius + c.anticomm01_frobenius);

  // {A0+A1,A2}: L_0 + L_2 multiplied by 2B0, and the printed estimate 2(1 + sqrt2) sqrt(eps) for the
  // product with (A0 + A1 + sqrt2 A2).
  const double l02 = 2.0 * c.sos_frobenius;
  c.combined_frobenius = 2.0 * l02 + 2.0 * (1.0 + kSqrt2) * r;
  c.anticomm2_frobenius = (c.combined_frobenius + c.anticomm01_frobenius) / kSqrt2;

  // C_X = K (x) [4(B0+B1) - ...]/64 with K = 8K0 + K1 + K2 - 4K3 - K4 - K5.
  const double k_errors = 2.0 * (2.0 * c.anticomm01_frobenius + 4.0 * c.anticomm2_frobenius + 2.0 * c.anticomm01_frobenius);
  const double first = (8.0 * c.corr_sum - k_errors) / 16.0;
  const double second = 2.0 * 16.0 * c.anticomm01_frobenius / 64.0;
  c.cx = first - second;

  // C_Z = A2 (x) [4(B0-B1) - (B0 + B1B0B1) + (B1 + B0B1B0)] / (4 sqrt2).
  c.cz = c.corr_diff / kSqrt2 - c.anticomm01_frobenius / (2.0 * kSqrt2);
  c.fidelity = 0.5 * (c.cx + c.cz);

  assert_identity(c.anticomm01_frobenius, 2.0 * (1.0 + kSqrt2) * r, "{A0,A1} Frobenius");
  assert_identity(c.anticomm01_frobenius * c.anticomm01_frobenius, observable_bounds(eps).anticomm01, "{A0,A1} squared");
  assert_identity(c.combined_frobenius, 2.0 * (1.0 + 3.0 * kSqrt2) * r, "combined anticommutator");
  assert_identity(c.anticomm2_frobenius, (8.0 + 2.0 * kSqrt2) * r, "{A0+A1,A2} Frobenius");
  assert_identity(c.anticomm2_frobenius * c.anticomm2_frobenius, observable_bounds(eps).anticomm2, "{A0+A1,A2} squared");
  assert_identity(c.corr_diff, kSqrt2 - std::sqrt(2.0 * eps), "difference correlation");
  assert_identity(c.corr_sum, 2.0 - 2.0 * (1.0 + 2.0 * kSqrt2) * r, "sum correlation");
  assert_identity(c.cx, 1.0 - (7.0 + 5.0 * kSqrt2) * r, "C_X");
  assert_identity(c.cz, 1.0 - 0.5 * (4.0 + kSqrt2) * r, "C_Z");
  assert_identity(c.fidelity, fidelity_bound_raw(eps), "fidelity");
  return c;
}

double fidelity_bound_raw(double eps) {
  require_nonnegative(eps);
  return 1.0 - 0.25 * (18.0 + 11.0 * kSqrt2) * std::sqrt(eps);
}

double fidelity_bound(double eps) { return std::max(0.0, fidelity_bound_raw(eps)); }

double nontrivial_threshold() {
  const double c = 18.0 + 11.0 * kSqrt2;
  return 4.0 / (c * c);
}

double isotropic_threshold() { return nontrivial_threshold() / 6.0; }

bool EpsilonReport::all_satisfied() const {
  return std::all_of(entries.begin(), entries.end(), [](const BoundEntry& e) { return e.satisfied; });
}

const BoundEntry* EpsilonReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

EpsilonReport validate_all(const bell::Realization& r) {
  const bell::BellFunctional f(kSqrt2);
  EpsilonReport rep;
  rep.beta = bell::bell_value(f, r);
  if (rep.beta > 6.0 + 1e-8) throw BellValueError("Bell value exceeds the quantum bound");
  rep.epsilon = 6.0 - rep.beta;
  rep.projective = r.projective();
  const double eps = std::max(rep.epsilon, 0.0);

  const Matrix sq = linalg::psd_sqrt(r.state);
  const auto fro = [&](const Matrix& o) { return linalg::frobenius_norm(o * sq); };
  const auto expect = [&](const Matrix& o) { return linalg::expectation(o, r.state); };
  const auto add = [&](std::string name, double measured, double bound, Direction dir) {
    BoundEntry e{std::move(name), measured, bound, dir, false};
    e.satisfied = e.margin() >= -kCompareTol;
    rep.entries.push_back(std::move(e));
  };

  const ObservableBounds t1 = observable_bounds(eps);
  const Matrix rhoA = r.reduced_A();
  const Matrix rhoB = r.reduced_B();
  for (int x = 0; x < 3; ++x) {
    add("projectivity_A" + std::to_string(x), linalg::expectation(r.A[x] * r.A[x], rhoA), t1.projectivity,
        Direction::lower);
    add("projectivity_B" + std::to_string(x), linalg::expectation(r.B[x] * r.B[x], rhoB), t1.projectivity,
        Direction::lower);
  }

  const BoundChain lc = bound_chain(eps);
  const auto L = bell::sos_operators(f, r);
  double sos_sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double n = fro(L[j]);
    sos_sum += n * n;
    add("sos_L" + std::to_string(j), n, lc.sos_frobenius, Direction::upper);
  }
  add("sos_sum", sos_sum, 2.0 * eps, Direction::upper);

  if (!rep.projective) return rep;

  const auto& A = r.A;
  const auto& B = r.B;
  const Matrix a01 = linalg::anticommutator(A[0], A[1]);
  const Matrix b01 = linalg::anticommutator(B[0], B[1]);
  const Matrix a2 = linalg::anticommutator(A[0] + A[1], A[2]);
  const Matrix b2 = linalg::anticommutator(B[0] + B[1], B[2]);

  add("anticomm01_A_second_moment", linalg::expectation(a01 * a01, rhoA), t1.anticomm01, Direction::upper);
  add("anticomm01_B_second_moment", linalg::expectation(b01 * b01, rhoB), t1.anticomm01, Direction::upper);
  add("anticomm2_A_second_moment", linalg::expectation(a2 * a2, rhoA), t1.anticomm2, Direction::upper);
  add("anticomm2_B_second_moment", linalg::expectation(b2 * b2, rhoB), t1.anticomm2, Direction::upper);
  add("anticomm01_A_frobenius", fro(r.lift_A(a01)), lc.anticomm01_frobenius, Direction::upper);
  add("anticomm01_B_frobenius", fro(r.lift_B(b01)), lc.anticomm01_frobenius, Direction::upper);
  add("combined_A_frobenius", fro(r.lift_A(a01 + kSqrt2 * a2)), lc.combined_frobenius, Direction::upper);
  add("anticomm2_A_frobenius", fro(r.lift_A(a2)), lc.anticomm2_frobenius, Direction::upper);
  add("anticomm2_B_frobenius", fro(r.lift_B(b2)), lc.anticomm2_frobenius, Direction::upper);
  add("corr_A0-A1_B2", expect(linalg::kron(Matrix(A[0] - A[1]), B[2])), lc.corr_diff, Direction::lower);
  add("corr_A2_B0-B1", expect(linalg::kron(A[2], Matrix(B[0] - B[1]))), lc.corr_diff, Direction::lower);
  add("corr_A0+A1_B0+B1", expect(linalg::kron(Matrix(A[0] + A[1]), Matrix(B[0] + B[1]))), lc.corr_sum,
      Direction::lower);

  const auto c = extraction::c_operators(r);
  add("c_x", expect(c.cX), lc.cx, Direction::lower);
  add("c_z", expect(c.cZ), lc.cz, Direction::lower);
  add("fidelity", extraction::extraction_fidelity(r), fidelity_bound(eps), Direction::lower);
  return rep;
}

void write_csv(std::ostream& os, const EpsilonReport& rep) {
  const auto old = os.precision(17);
  os << "bound_name,measured,bound,satisfied\n";
  for (const auto& e : rep.entries)
    os << e.name << ',' << e.measured << ',' << e.bound << ',' << (e.satisfied ? "true" : "false") << '\n';
  os.precision(old);
}

bell::Realization near_optimal_realization(std::uint64_t seed, int index, bool projective) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  random::Rng rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bell::BellFunctional f(kSqrt2);

  const int k = 1 + static_cast<int>(rng() % 2);
  std::vector<double> angles, weights;
  for (int j = 0; j < k; ++j) {
    angles.push_back(2.0 * std::numbers::pi * unit(rng));
    weights.push_back(0.2 + unit(rng));
  }
  bell::Realization r = bell::block_realization(f, angles, weights);

  const double delta = std::pow(10.0, -4.0 + 2.5 * unit(rng));
  const double p = std::pow(10.0, -5.0 + 3.5 * unit(rng));
  const auto perturb = [&](const Matrix& o) {
    Matrix h = random::hermitian(rng, static_cast<int>(o.rows()));
    h /= linalg::operator_norm(h);
    Matrix m = o + delta * h;
    if (projective) return linalg::sign_projection(m);
    return Matrix(m / std::max(1.0, linalg::operator_norm(m)));
  };
  for (int x = 0; x < 3; ++x) {
    r.A[x] = perturb(r.A[x]);
    r.B[x] = perturb(r.B[x]);
  }
  const Matrix noise = random::density(rng, r.dimA * r.dimB);
  return bell::make_realization(r.A, r.B, Matrix((1.0 - p) * r.state + p * noise), bell::SupportCheck::skip);
}

SweepResult soundness_sweep(const SweepOptions& opt) {
  struct Outcome {
    double beta = 0.0;
    int violations = 0;
    double worst = 0.0;
    std::string worst_name;
  };
  std::vector<Outcome> out(std::max(opt.trials, 0));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int i = next++; i < opt.trials; i = next++) {
      const auto rep = validate_all(near_optimal_realization(opt.seed, i, opt.projective));
      Outcome o;
      o.beta = rep.beta;
      o.worst = std::numeric_limits<double>::infinity();
      for (const auto& e : rep.entries) {
        o.violations += !e.satisfied;
        if (e.margin() < o.worst) {
          o.worst = e.margin();
          o.worst_name = e.name;
        }
      }
      out[i] = std::move(o);
    }
  };
  const int jobs = std::clamp(opt.jobs, 1, std::max(1, opt.trials));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  SweepResult res;
  res.trials = opt.trials;
  res.worst_margin = std::numeric_limits<double>::infinity();
  res.min_beta = std::numeric_limits<double>::infinity();
  res.max_beta = -std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    res.violations += o.violations;
    res.min_beta = std::min(res.min_beta, o.beta);
    res.max_beta = std::max(res.max_beta, o.beta);
    if (o.worst < res.worst_margin) {
      res.worst_margin = o.worst;
      res.worst_entry = o.worst_name;
    }
  }
  return res;
}

}  // namespace selftest::robust
