#include "selftest/relaxation.hpp"

#include <cmath>
#include <stdexcept>

namespace selftest::npa {

namespace {

using sdp::SparseMatrix;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Real-linear functional on w: constant + sum_k g_k w_k.
struct Affine {
  double constant = 0.0;
  std::vector<double> g;
};

Affine to_affine(const MomentFunctional& f, const MomentProblem& mp) {
  Affine a;
  a.g.assign(static_cast<std::size_t>(mp.full_size), 0.0);
  for (std::size_t c = 0; c < f.direct.size(); ++c) {
    const cplx al = f.direct[c], be = f.conj[c];
    if (c == 0) {
      a.constant = (al + be).real();
      continue;
    }
    if (mp.re[c] >= 0) a.g[static_cast<std::size_t>(mp.re[c])] += (al + be).real();
    if (mp.im[c] >= 0) a.g[static_cast<std::size_t>(mp.im[c])] += -al.imag() + be.imag();
  }
  return a;
}

}  // namespace

std::vector<cplx> MomentProblem::class_values(const sdp::VectorXd& v) const {
  std::vector<double> w(static_cast<std::size_t>(full_size), 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) w[static_cast<std::size_t>(free[k])] = v(static_cast<Eigen::Index>(k));
  for (auto it = substitutions.rbegin(); it != substitutions.rend(); ++it) {
    double s = it->constant;
    for (const auto& [idx, coef] : it->terms) s += coef * w[static_cast<std::size_t>(idx)];
    w[static_cast<std::size_t>(it->index)] = s;
  }
  std::vector<cplx> y(re.size());
  y[0] = 1.0;
  for (std::size_t c = 1; c < re.size(); ++c)
    y[c] = cplx(w[static_cast<std::size_t>(re[c])], im[c] >= 0 ? w[static_cast<std::size_t>(im[c])] : 0.0);
  return y;
}

MomentProblem build_moment_problem(const MomentSkeleton& sk, Field field, const MomentFunctional& objective,
                                   sdp::Sense sense, const std::vector<LinearConstraint>& equalities) {
  if (field == Field::real) {
    if (!objective.real_coefficients()) throw std::invalid_argument("objective has complex coefficients");
    for (const auto& e : equalities)
      if (!e.functional.real_coefficients()) throw std::invalid_argument("constraint has complex coefficients");
  }

  MomentProblem mp;
  mp.skeleton = &sk;
  mp.field = field;
  const auto& classes = sk.classes();
  mp.re.assign(classes.size(), -1);
  mp.im.assign(classes.size(), -1);
  int next = 0;
  for (std::size_t c = 1; c < classes.size(); ++c) {
    mp.re[c] = next++;
    if (field == Field::complex && !classes[c].self_adjoint) mp.im[c] = next++;
  }
  mp.full_size = next;

  const int n = sk.size();
  const int dim = field == Field::real ? n : 2 * n;
  std::vector<Triplets> trip(static_cast<std::size_t>(next) + 1);  // slot 0 is F0
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Cell& cell = sk.cell(i, j);
      const std::size_t rslot = cell.cls == 0 ? 0 : static_cast<std::size_t>(mp.re[cell.cls]) + 1;
      trip[rslot].emplace_back(i, j, 1.0);
      if (field == Field::complex) {
        trip[rslot].emplace_back(i + n, j + n, 1.0);
        if (mp.im[cell.cls] >= 0) {
          const double s = cell.conjugated ? -1.0 : 1.0;
          const std::size_t islot = static_cast<std::size_t>(mp.im[cell.cls]) + 1;
          trip[islot].emplace_back(i + n, j, s);
          trip[islot].emplace_back(i, j + n, -s);
        }
      }
    }
  std::vector<SparseMatrix> F(trip.size(), SparseMatrix(dim, dim));
  for (std::size_t k = 0; k < trip.size(); ++k) F[k].setFromTriplets(trip[k].begin(), trip[k].end());

  Affine obj = to_affine(objective, mp);
  std::vector<Affine> eqs;
  std::vector<double> rhs;
  for (const auto& e : equalities) {
    eqs.push_back(to_affine(e.functional, mp));
    rhs.push_back(e.value);
  }

  std::vector<bool> alive(static_cast<std::size_t>(next), true);
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    Affine& q = eqs[e];
    int piv = -1;
    for (int k = 0; k < next; ++k)
      if (alive[static_cast<std::size_t>(k)] && (piv < 0 || std::abs(q.g[static_cast<std::size_t>(k)]) > std::abs(q.g[static_cast<std::size_t>(piv)])))
        piv = k;
    if (piv < 0 || std::abs(q.g[static_cast<std::size_t>(piv)]) < 1e-12)
      throw std::invalid_argument("equality constraint does not involve any free moment");
    const double gp = q.g[static_cast<std::size_t>(piv)];
    const double shift = (rhs[e] - q.constant) / gp;
    MomentProblem::Substitution sub{piv, shift, {}};
    const SparseMatrix Fp = F[static_cast<std::size_t>(piv) + 1];
    F[0] += shift * Fp;
    obj.constant += obj.g[static_cast<std::size_t>(piv)] * shift;
    for (std::size_t o = e + 1; o < eqs.size(); ++o) eqs[o].constant += eqs[o].g[static_cast<std::size_t>(piv)] * shift;
    for (int k = 0; k < next; ++k) {
      const double gk = q.g[static_cast<std::size_t>(k)];
      if (k == piv || !alive[static_cast<std::size_t>(k)] || gk == 0.0) continue;
      const double ratio = gk / gp;
      sub.terms.emplace_back(k, -ratio);
      F[static_cast<std::size_t>(k) + 1] -= ratio * Fp;
      obj.g[static_cast<std::size_t>(k)] -= obj.g[static_cast<std::size_t>(piv)] * ratio;
      for (std::size_t o = e + 1; o < eqs.size(); ++o)
        eqs[o].g[static_cast<std::size_t>(k)] -= eqs[o].g[static_cast<std::size_t>(piv)] * ratio;
    }
    alive[static_cast<std::size_t>(piv)] = false;
    mp.substitutions.push_back(std::move(sub));
  }

  sdp::SdpProblem& p = mp.sdp;
  p.dim = dim;
  p.sense = sense;
  p.variable_bound = 1.0;
  p.offset = obj.constant;
  p.F0 = F[0];
  std::vector<double> c;
  for (int k = 0; k < next; ++k) {
    if (!alive[static_cast<std::size_t>(k)]) continue;
    mp.free.push_back(k);
    SparseMatrix f = F[static_cast<std::size_t>(k) + 1];
    f.prune(0.0);
    p.F.push_back(std::move(f));
    c.push_back(obj.g[static_cast<std::size_t>(k)]);
  }
  p.c = Eigen::Map<const sdp::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  p.F0.prune(0.0);
  return mp;
}

MomentResult solve_moment_problem(const MomentProblem& mp, const sdp::SolverOptions& opt) {
  MomentResult r;
  r.solution = sdp::solve(mp.sdp, opt);
  r.value = r.solution.objective;
  r.certified = sdp::certified_bound(r.solution, mp.sdp).value;
  r.moments = mp.class_values(r.solution.v);
  return r;
}

}  // namespace selftest::npa
