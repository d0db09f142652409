#include "selftest/npa.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

namespace selftest::npa {

namespace {

bool commute(int x, int y, const PairSet& pairs) {
  return pairs.count({std::min(x, y), std::max(x, y)}) > 0;
}

Word free_reduce(const Word& w) {
  Word out;
  for (int x : w) {
    if (!out.empty() && out.back() == x)
      out.pop_back();
    else
      out.push_back(x);
  }
  return out;
}

bool shorter_or_smaller(const Word& a, const Word& b) {
  return a.size() != b.size() ? a.size() < b.size() : a < b;
}

Word reversed(Word w) {
  std::reverse(w.begin(), w.end());
  return w;
}

Word concat(const Word& a, const Word& b) {
  Word out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

Word canonicalize(const Word& w, const PairSet& commuting) {
  if (commuting.empty()) return free_reduce(w);
  // Words in involutions with some commuting pairs form a right-angled Coxeter group: all reduced
  // words of an element are related by commutations, so the search below finds a unique minimum.
  std::set<Word> seen{w};
  std::deque<Word> queue{w};
  Word best = w;
  while (!queue.empty()) {
    Word cur = std::move(queue.front());
    queue.pop_front();
    if (shorter_or_smaller(cur, best)) best = cur;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      Word next;
      if (cur[i] == cur[i + 1]) {
        next = cur;
        next.erase(next.begin() + static_cast<long>(i), next.begin() + static_cast<long>(i) + 2);
      } else if (commute(cur[i], cur[i + 1], commuting)) {
        next = cur;
        std::swap(next[i], next[i + 1]);
      } else {
        continue;
      }
      if (seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return best;
}

std::string to_string(const Word& w, char party) {
  std::string s;
  for (int x : w) {
    s += party;
    s += std::to_string(x);
  }
  return s;
}

Monomial canonicalize(const Monomial& m, const Commutation& c) {
  return {canonicalize(m.a, c.alice), canonicalize(m.b, c.bob)};
}

Monomial adjoint(const Monomial& m, const Commutation& c) {
  return {canonicalize(reversed(m.a), c.alice), canonicalize(reversed(m.b), c.bob)};
}

std::string to_string(const Monomial& m) {
  if (m.identity()) return "1";
  std::string s = to_string(m.a, 'A');
  if (!m.a.empty() && !m.b.empty()) s += '*';
  return s + to_string(m.b, 'B');
}

std::vector<Monomial> build_basis(Level level, int settings) {
  if (settings < 1) throw std::invalid_argument("need at least one setting");
  std::vector<Word> singles, pairs;
  for (int x = 0; x < settings; ++x) singles.push_back({x});
  for (int x = 0; x < settings; ++x)
    for (int y = 0; y < settings; ++y)
      if (x != y) pairs.push_back({x, y});

  std::vector<Monomial> out;
  if (level == Level::one_plus_ab) {
    out.push_back({});
    for (const auto& w : singles) out.push_back({w, {}});
    for (const auto& w : singles) out.push_back({{}, w});
    for (const auto& a : singles)
      for (const auto& b : singles) out.push_back({a, b});
    return out;
  }
  std::vector<Word> party{Word{}};
  party.insert(party.end(), singles.begin(), singles.end());
  party.insert(party.end(), pairs.begin(), pairs.end());
  for (const auto& a : party)
    for (const auto& b : party) out.push_back({a, b});
  return out;
}

MomentSkeleton::MomentSkeleton(std::vector<Monomial> basis, Commutation comm)
    : comm_(std::move(comm)) {
  std::set<Monomial> present;
  for (const auto& m : basis) {
    Monomial c = canonicalize(m, comm_);
    if (present.insert(c).second)
      basis_.push_back(std::move(c));
    else
      ++dropped_;
  }
  const std::size_t n = basis_.size();
  cells_.resize(n * n);
  classes_.push_back({Monomial{}, true, 0, 0, 0});
  index_[Monomial{}] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Monomial& u = basis_[i];
    const Word ua = reversed(u.a), ub = reversed(u.b);
    for (std::size_t j = 0; j < n; ++j) {
      const Monomial m = canonicalize(Monomial{concat(ua, basis_[j].a), concat(ub, basis_[j].b)}, comm_);
      const Monomial d = adjoint(m, comm_);
      const Monomial& rep = std::min(m, d);
      auto it = index_.find(rep);
      if (it == index_.end()) {
        it = index_.emplace(rep, static_cast<int>(classes_.size())).first;
        classes_.push_back({rep, m == d, 0, -1, -1});
      }
      MomentClass& cls = classes_[it->second];
      const bool conj = !(m == rep);
      if (!conj && cls.row < 0) {
        cls.row = static_cast<int>(i);
        cls.col = static_cast<int>(j);
      }
      ++cls.count;
      cells_[i * n + j] = {it->second, conj};
    }
  }
}

std::optional<Cell> MomentSkeleton::find(const Monomial& m) const {
  const Monomial d = adjoint(m, comm_);
  const Monomial& rep = std::min(m, d);
  const auto it = index_.find(rep);
  if (it == index_.end()) return std::nullopt;
  return Cell{it->second, !(m == rep)};
}

void MomentSkeleton::dump(std::ostream& os) const {
  os << "row,col,class_id,conjugated\n";
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Cell& c = cell(i, j);
      os << i << ',' << j << ',' << c.cls << ',' << (c.conjugated ? 1 : 0) << '\n';
    }
}

MomentSkeleton build_skeleton(const std::vector<Monomial>& basis, const Commutation& comm) {
  return MomentSkeleton(basis, comm);
}

PartyPolynomial PartyPolynomial::one() { return {{{cplx(1.0), Word{}}}}; }
PartyPolynomial PartyPolynomial::letter(int x) { return {{{cplx(1.0), Word{x}}}}; }

PartyPolynomial& PartyPolynomial::operator+=(const PartyPolynomial& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  return *this;
}

PartyPolynomial& PartyPolynomial::operator-=(const PartyPolynomial& o) {
  for (const auto& [c, w] : o.terms) terms.emplace_back(-c, w);
  return *this;
}

PartyPolynomial& PartyPolynomial::operator*=(cplx s) {
  for (auto& t : terms) t.first *= s;
  return *this;
}

PartyPolynomial operator*(const PartyPolynomial& p, const PartyPolynomial& q) {
  PartyPolynomial out;
  for (const auto& [c, w] : p.terms)
    for (const auto& [d, v] : q.terms) out.terms.emplace_back(c * d, free_reduce(concat(w, v)));
  return out;
}

PartyPolynomial commutator(const PartyPolynomial& p, const PartyPolynomial& q) { return p * q - q * p; }

OperatorPolynomial& OperatorPolynomial::operator+=(const OperatorPolynomial& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  return *this;
}

OperatorPolynomial& OperatorPolynomial::operator*=(cplx s) {
  for (auto& t : terms) t.first *= s;
  return *this;
}

OperatorPolynomial OperatorPolynomial::canonical(const Commutation& c) const {
  std::map<Monomial, cplx> merged;
  for (const auto& [coef, m] : terms) merged[canonicalize(m, c)] += coef;
  OperatorPolynomial out;
  for (const auto& [m, coef] : merged)
    if (std::abs(coef) > 1e-15) out.terms.emplace_back(coef, m);
  return out;
}

OperatorPolynomial tensor(const PartyPolynomial& p, const PartyPolynomial& q) {
  OperatorPolynomial out;
  for (const auto& [c, w] : p.terms)
    for (const auto& [d, v] : q.terms) out.terms.emplace_back(c * d, Monomial{w, v});
  return out;
}

OperatorPolynomial bell_polynomial(const bell::BellFunctional& f) {
  OperatorPolynomial out;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      if (f.coefficient(x, y) != 0.0) out.terms.emplace_back(f.coefficient(x, y), Monomial{{x}, {y}});
  return out;
}

OperatorPolynomial chsh_polynomial() {
  OperatorPolynomial out;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) out.terms.emplace_back(x * y == 1 ? -1.0 : 1.0, Monomial{{x}, {y}});
  return out;
}

OperatorPolynomial marginal_polynomial(linalg::Party party, int setting) {
  OperatorPolynomial out;
  out.terms.emplace_back(1.0, party == linalg::Party::A ? Monomial{{setting}, {}} : Monomial{{}, {setting}});
  return out;
}

cplx MomentFunctional::evaluate(const std::vector<cplx>& y) const {
  cplx s = 0.0;
  for (std::size_t c = 0; c < direct.size(); ++c) s += direct[c] * y[c] + conj[c] * std::conj(y[c]);
  return s;
}

bool MomentFunctional::real_coefficients(double tol) const {
  for (std::size_t c = 0; c < direct.size(); ++c)
    if (std::abs(direct[c].imag()) > tol || std::abs(conj[c].imag()) > tol) return false;
  return true;
}

MomentFunctional poly_to_moments(const OperatorPolynomial& p, const MomentSkeleton& sk) {
  MomentFunctional f;
  f.direct.assign(sk.classes().size(), 0.0);
  f.conj.assign(sk.classes().size(), 0.0);
  for (const auto& [coef, m] : p.canonical(sk.commutation()).terms) {
    const auto cell = sk.find(m);
    if (!cell) throw UnrepresentableError(to_string(m));
    (cell->conjugated ? f.conj : f.direct)[cell->cls] += coef;
  }
  return f;
}

Matrix word_operator(const Word& w, const std::array<Matrix, 3>& obs) {
  Matrix out = linalg::identity(obs[0].rows());
  for (int x : w) out = out * obs[x];
  return out;
}

namespace {

Matrix monomial_operator(const Monomial& m, const bell::Realization& r) {
  return linalg::kron(word_operator(m.a, r.A), word_operator(m.b, r.B));
}

}  // namespace

std::vector<cplx> true_class_values(const MomentSkeleton& sk, const bell::Realization& r) {
  std::vector<cplx> y;
  for (const auto& c : sk.classes()) y.push_back((r.state * monomial_operator(c.rep, r)).trace());
  return y;
}

Matrix true_moment_matrix(const MomentSkeleton& sk, const bell::Realization& r) {
  const int n = sk.size();
  std::vector<Matrix> ops;
  for (const auto& m : sk.basis()) ops.push_back(monomial_operator(m, r));
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = (r.state * ops[i].adjoint() * ops[j]).trace();
  return g;
}

Matrix moment_matrix(const MomentSkeleton& sk, const std::vector<cplx>& y) {
  const int n = sk.size();
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Cell& c = sk.cell(i, j);
      g(i, j) = c.conjugated ? std::conj(y[c.cls]) : y[c.cls];
    }
  return g;
}

cplx evaluate(const OperatorPolynomial& p, const bell::Realization& r) {
  cplx s = 0.0;
  for (const auto& [coef, m] : p.terms) s += coef * (r.state * monomial_operator(m, r)).trace();
  return s;
}

}  // namespace selftest::npa
