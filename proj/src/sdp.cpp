#include "selftest/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iostream>
#include <numeric>
#include <ostream>

namespace selftest::sdp {

namespace {

struct Entry {
  int row, col;
  double value;
};

struct SparseSym {
  std::vector<Entry> entries;  // both triangles
  std::vector<int> rows;       // distinct rows with entries
};

SparseSym to_entries(const SparseMatrix& m, double scale) {
  SparseSym s;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.value() != 0.0) s.entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), scale * it.value()});
  for (const auto& e : s.entries) s.rows.push_back(e.row);
  std::sort(s.rows.begin(), s.rows.end());
  s.rows.erase(std::unique(s.rows.begin(), s.rows.end()), s.rows.end());
  return s;
}

double inner(const SparseSym& a, const MatrixXd& s) {
  double v = 0.0;
  for (const auto& e : a.entries) v += e.value * s(e.row, e.col);
  return v;
}

VectorXd apply_A(const std::vector<SparseSym>& A, const MatrixXd& s) {
  VectorXd out(static_cast<Eigen::Index>(A.size()));
  for (std::size_t k = 0; k < A.size(); ++k) out(static_cast<Eigen::Index>(k)) = inner(A[k], s);
  return out;
}

MatrixXd apply_At(const std::vector<SparseSym>& A, const VectorXd& y, int n) {
  MatrixXd out = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < A.size(); ++k)
    for (const auto& e : A[k].entries) out(e.row, e.col) += y(static_cast<Eigen::Index>(k)) * e.value;
  return out;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// M_ij = tr(A_i X A_j Z^{-1}).
MatrixXd schur(const std::vector<SparseSym>& A, const MatrixXd& X, const MatrixXd& Zinv) {
  const auto m = static_cast<Eigen::Index>(A.size());
  const auto n = X.rows();
  MatrixXd M(m, m);
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const SparseSym& ai = A[static_cast<std::size_t>(i)];
    const auto r = static_cast<Eigen::Index>(ai.rows.size());
    for (Eigen::Index k = 0; k < r; ++k) pos[static_cast<std::size_t>(ai.rows[static_cast<std::size_t>(k)])] = static_cast<int>(k);
    // (A_i Z^{-1}) restricted to the rows where A_i is nonzero.
    MatrixXd b = MatrixXd::Zero(r, n);
    for (const auto& e : ai.entries) b.row(pos[static_cast<std::size_t>(e.row)]) += e.value * Zinv.row(e.col);
    MatrixXd xr(n, r);
    for (Eigen::Index k = 0; k < r; ++k) xr.col(k) = X.col(ai.rows[static_cast<std::size_t>(k)]);
    const MatrixXd g = xr * b;  // X A_i Z^{-1}
    for (Eigen::Index j = 0; j < m; ++j) {
      double v = 0.0;
      for (const auto& e : A[static_cast<std::size_t>(j)].entries) v += e.value * g(e.col, e.row);
      M(i, j) = v;
    }
    for (int row : ai.rows) pos[static_cast<std::size_t>(row)] = -1;
  }
  return 0.5 * (M + M.transpose());
}

// Largest step a <= inf keeping s + a ds PSD, given the Cholesky factor of s.
double max_step(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& ds) {
  const MatrixXd linv_ds = chol.matrixL().solve(ds);
  const MatrixXd w = chol.matrixL().solve(linv_ds.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(sym(w), Eigen::EigenvaluesOnly).eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

Eigen::LLT<MatrixXd> factor_pd(const MatrixXd& s, const char* what) {
  Eigen::LLT<MatrixXd> chol(s);
  if (chol.info() != Eigen::Success) throw NumericalError(std::string("lost positive definiteness of ") + what);
  return chol;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::near_optimal: return "near-optimal";
    case Status::max_iterations: return "max-iterations";
    case Status::infeasible_suspected: return "infeasible-suspected";
    case Status::stalled: return "stalled";
  }
  return "unknown";
}

void SdpProblem::validate() const {
  const auto check = [&](const SparseMatrix& m, const std::string& name) {
    if (m.rows() != dim || m.cols() != dim) throw std::invalid_argument(name + " has wrong size");
    const SparseMatrix t = m.transpose();
    if ((m - t).norm() > 1e-12 * std::max(1.0, m.norm())) throw std::invalid_argument(name + " is not symmetric");
  };
  if (dim <= 0) throw std::invalid_argument("problem dimension must be positive");
  check(F0, "F0");
  if (c.size() != num_vars()) throw std::invalid_argument("objective length differs from variable count");
  for (int k = 0; k < num_vars(); ++k) {
    check(F[static_cast<std::size_t>(k)], "F" + std::to_string(k + 1));
    if (F[static_cast<std::size_t>(k)].norm() == 0.0)
      throw std::invalid_argument("F" + std::to_string(k + 1) + " is zero; variables must be independent");
  }
}

SdpSolution solve(const SdpProblem& p, const SolverOptions& opt) {
  p.validate();
  const int n = p.dim;
  const int m = p.num_vars();
  const double sign = p.sense == Sense::maximize ? 1.0 : -1.0;

  const MatrixXd C = MatrixXd(p.F0);
  if (m == 0) {
    // Nothing to optimize: feasible iff F0 >= 0, and X = 0 certifies the constant.
    SdpSolution sol;
    sol.status = Eigen::SelfAdjointEigenSolver<MatrixXd>(C, Eigen::EigenvaluesOnly).eigenvalues()(0) >= -1e-12
                     ? Status::optimal
                     : Status::infeasible_suspected;
    sol.v = VectorXd(0);
    sol.X = MatrixXd::Zero(n, n);
    sol.Z = C;
    sol.objective = sol.certificate_value = p.offset;
    return sol;
  }
  std::vector<SparseSym> A;
  A.reserve(static_cast<std::size_t>(m));
  for (const auto& f : p.F) A.push_back(to_entries(f, -1.0));
  const VectorXd b = sign * p.c;

  const double normb = b.norm();
  const double normC = C.norm();
  double max_a = 0.0, ratio = 0.0;
  for (int k = 0; k < m; ++k) {
    const double na = p.F[static_cast<std::size_t>(k)].norm();
    max_a = std::max(max_a, na);
    ratio = std::max(ratio, (1.0 + std::abs(b(k))) / (1.0 + na));
  }
  const double rn = std::sqrt(static_cast<double>(n));
  const double xi = std::max({10.0, rn, n * ratio});
  const double eta = std::max({10.0, rn, max_a, normC});

  MatrixXd X = xi * MatrixXd::Identity(n, n);
  MatrixXd Z = eta * MatrixXd::Identity(n, n);
  VectorXd y = VectorXd::Zero(m);

  SdpSolution sol;
  int tiny_steps = 0;
  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    int it = 0;
    MatrixXd X, Z;
    VectorXd y;
    double gap = 0, pinf = 0, dinf = 0;
  } best;
  const auto stopped = [&] {
    return std::max({sol.gap, sol.primal_residual, sol.dual_residual}) <= std::sqrt(opt.tol) ? Status::near_optimal
                                                                                           : Status::stalled;
  };
  for (int it = 0;; ++it) {
    const VectorXd Rp = b - apply_A(A, X);
    const MatrixXd Rd = C - Z - apply_At(A, y, n);
    const double pobj = (C.array() * X.array()).sum();
    const double dobj = b.dot(y);
    const double xz = (X.array() * Z.array()).sum();
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pinf = Rp.norm() / (1.0 + normb);
    const double dinf = Rd.norm() / (1.0 + normC);

    sol.iterations = it;
    sol.gap = relgap;
    sol.primal_residual = pinf;
    sol.dual_residual = dinf;
    if (opt.verbose)
      std::cerr << "it " << it << " pobj " << pobj << " dobj " << dobj << " gap " << relgap << " pinf " << pinf
                << " dinf " << dinf << '\n';

    if (std::max({relgap, pinf, dinf}) <= opt.tol) {
      sol.status = Status::optimal;
      break;
    }
    if (const double merit = std::max({relgap, pinf, dinf}); merit < best.merit) {
      best = {merit, it, X, Z, y, relgap, pinf, dinf};
    } else if (it - best.it >= 8) {
      sol.status = stopped();
      break;
    }
    // Farkas: every feasible v with |v_k| <= bound has 0 <= <F(v), X> <= <C, X> + bound ||A(X)||_1.
    const bool farkas = std::isfinite(p.variable_bound) &&
                        pobj + p.variable_bound * (b - Rp).lpNorm<1>() < -1e-9 * (1.0 + normC * X.norm());
    if (farkas || X.norm() > 1e12 || y.norm() > 1e12 || !std::isfinite(pobj) || !std::isfinite(dobj)) {
      sol.status = Status::infeasible_suspected;
      break;
    }
    if (it >= opt.max_iterations) {
      sol.status = Status::max_iterations;
      break;
    }
    if (tiny_steps >= 5) {
      sol.status = stopped();
      break;
    }

    const double mu = xz / n;
    if (Eigen::LLT<MatrixXd>(Z).info() != Eigen::Success || Eigen::LLT<MatrixXd>(X).info() != Eigen::Success) {
      sol.status = stopped();
      break;
    }
    const auto zchol = factor_pd(Z, "the slack matrix");
    const MatrixXd Zinv = sym(zchol.solve(MatrixXd::Identity(n, n)));
    const MatrixXd M = schur(A, X, Zinv);
    // Near the optimum M can lose definiteness to rounding; retry with a tiny diagonal shift.
    Eigen::LLT<MatrixXd> mchol(M);
    const double dmax = M.diagonal().cwiseAbs().maxCoeff();
    for (double shift : {1e-14, 1e-12, 1e-10}) {
      if (mchol.info() == Eigen::Success) break;
      mchol.compute(M + shift * dmax * MatrixXd::Identity(m, m));
    }
    if (mchol.info() != Eigen::Success && std::max({relgap, pinf, dinf}) <= std::sqrt(opt.tol)) {
      sol.status = Status::near_optimal;
      break;
    }
    if (mchol.info() != Eigen::Success) {
      const auto ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues();
      throw NumericalError("Schur complement is not positive definite (eigenvalues in [" + std::to_string(ev(0)) +
                           ", " + std::to_string(ev(m - 1)) + "], iteration " + std::to_string(it) + ")");
    }
    const auto solve_m = [&](const VectorXd& rhs) -> VectorXd { return mchol.solve(rhs); };

    const auto xchol = factor_pd(X, "the primal iterate");
    const VectorXd common = b + apply_A(A, X * Rd * Zinv);

    // Predictor.
    VectorXd dy = solve_m(common);
    MatrixXd dZ = Rd - apply_At(A, dy, n);
    MatrixXd dX = -X - sym(X * dZ * Zinv);
    const double ap = std::min(1.0, 0.98 * max_step(xchol, dX));
    const double ad = std::min(1.0, 0.98 * max_step(zchol, dZ));
    const double pred = ((X + ap * dX).array() * (Z + ad * dZ).array()).sum();
    const double sigma = std::clamp(std::pow(std::max(pred, 0.0) / xz, 3.0), 0.0, 1.0);

    // Corrector.
    const MatrixXd second = dX * dZ * Zinv;
    dy = solve_m(common - sigma * mu * apply_A(A, Zinv) + apply_A(A, second));
    dZ = Rd - apply_At(A, dy, n);
    dX = sigma * mu * Zinv - X - sym(X * dZ * Zinv) - sym(second);
    double sp = std::min(1.0, 0.98 * max_step(xchol, dX));
    double sd = std::min(1.0, 0.98 * max_step(zchol, dZ));
    // The step-length eigenvalue is computed through ill-conditioned factors late in the run; back off until the
    // new iterates factor.
    const auto keep_pd = [](const MatrixXd& s, const MatrixXd& ds, double& a) {
      for (int k = 0; k < 30 && Eigen::LLT<MatrixXd>(sym(s + a * ds)).info() != Eigen::Success; ++k) a *= 0.7;
    };
    keep_pd(X, dX, sp);
    keep_pd(Z, dZ, sd);

    X = sym(X + sp * dX);
    y += sd * dy;
    Z = sym(Z + sd * dZ);
    tiny_steps = (sp < 1e-8 && sd < 1e-8) ? tiny_steps + 1 : 0;
  }

  if (sol.status != Status::optimal && sol.status != Status::infeasible_suspected && best.merit < std::max({sol.gap, sol.primal_residual, sol.dual_residual})) {
    // Late iterations can drift once the Schur complement degenerates; report the best point seen.
    X = best.X;
    y = best.y;
    sol.gap = best.gap;
    sol.primal_residual = best.pinf;
    sol.dual_residual = best.dinf;
    sol.status = stopped();
  }
  sol.v = y;
  sol.X = X;
  sol.Z = C - apply_At(A, y, n);
  sol.objective = p.c.dot(y) + p.offset;
  sol.certificate_value = sign * (C.array() * X.array()).sum() + p.offset;
  return sol;
}

CertifiedBound certified_bound(const SdpSolution& sol, const SdpProblem& p) {
  const int n = p.dim;
  const double sign = p.sense == Sense::maximize ? 1.0 : -1.0;
  if (sol.X.rows() != n || !sol.X.allFinite()) throw NumericalError("certificate is missing or not finite");
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(sym(sol.X), Eigen::EigenvaluesOnly).eigenvalues()(0);
  const MatrixXd Xp = sym(sol.X) - std::min(0.0, lmin) * MatrixXd::Identity(n, n);

  const MatrixXd C = MatrixXd(p.F0);
  double residual = 0.0;
  for (int k = 0; k < p.num_vars(); ++k) {
    // b_k - <A_k, X> with A_k = -F_k.
    double r = sign * p.c(k);
    const SparseMatrix& f = p.F[static_cast<std::size_t>(k)];
    for (int o = 0; o < f.outerSize(); ++o)
      for (SparseMatrix::InnerIterator it(f, o); it; ++it) r += it.value() * Xp(it.row(), it.col());
    residual += std::abs(r);
  }
  if (!std::isfinite(residual)) throw NumericalError("certificate residual is not finite");
  double correction = 0.0;
  if (residual > 0.0) {
    if (!std::isfinite(p.variable_bound)) throw NumericalError("residual correction needs a variable bound");
    correction = residual * p.variable_bound;
  }
  const double upper = (C.array() * Xp.array()).sum() + correction;
  CertifiedBound out;
  out.value = sign * upper + p.offset;
  out.slack = sign * (out.value - sol.objective);
  return out;
}

MatrixXd hermitian_embed(const linalg::Matrix& h) {
  const auto n = h.rows();
  MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return out;
}

void dump(std::ostream& os, const SdpProblem& p) {
  const auto old = os.precision(17);
  os << "sdp " << p.dim << ' ' << p.num_vars() << ' ' << (p.sense == Sense::maximize ? "max" : "min") << '\n';
  os << "offset " << p.offset << "\nbound " << p.variable_bound << '\n';
  const auto matrix = [&](const SparseMatrix& m, int k) {
    for (int o = 0; o < m.outerSize(); ++o)
      for (SparseMatrix::InnerIterator it(m, o); it; ++it)
        if (it.row() <= it.col()) os << k << ' ' << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  };
  matrix(p.F0, 0);
  for (int k = 0; k < p.num_vars(); ++k) {
    os << "c " << k + 1 << ' ' << p.c(k) << '\n';
    matrix(p.F[static_cast<std::size_t>(k)], k + 1);
  }
  os.precision(old);
}

void dump(std::ostream& os, const SdpSolution& s) {
  const auto old = os.precision(17);
  os << "status " << to_string(s.status) << "\niterations " << s.iterations << "\nobjective " << s.objective
     << "\ncertificate " << s.certificate_value << "\ngap " << s.gap << "\nprimal_residual " << s.primal_residual
     << "\ndual_residual " << s.dual_residual << '\n';
  for (Eigen::Index k = 0; k < s.v.size(); ++k) os << "v " << k + 1 << ' ' << s.v(k) << '\n';
  os.precision(old);
}

}  // namespace selftest::sdp
