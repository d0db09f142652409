#include "selftest/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace selftest::io {

using linalg::Matrix;

namespace {

void write_block(std::ostream& os, const std::string& label, const Matrix& m) {
  os << label << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << (j ? "  " : "") << m(i, j).real() << ' ' << m(i, j).imag();
    os << '\n';
  }
}

// Token reader that skips comments and tracks line numbers for messages.
class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string word() {
    while (!(line_ >> tok_)) {
      std::string raw;
      if (!std::getline(is_, raw)) throw FormatError("unexpected end of file after line " + std::to_string(lineno_));
      ++lineno_;
      if (const auto p = raw.find_first_not_of(" \t\r"); p != std::string::npos && raw[p] == '#') raw.clear();
      line_.clear();
      line_.str(raw);
    }
    return tok_;
  }

  double number() {
    const std::string w = word();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size()) fail("expected a number, got '" + w + "'");
    return v;
  }

  int dimension() {
    const double v = number();
    if (v < 1 || v > 4096 || v != static_cast<int>(v)) fail("invalid dimension");
    return static_cast<int>(v);
  }

  void expect(const std::string& label) {
    if (const std::string w = word(); w != label) fail("expected '" + label + "', got '" + w + "'");
  }

  Matrix block(const std::string& label, int d) {
    expect(label);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double re = number();
        m(i, j) = linalg::cplx(re, number());
      }
    return m;
  }

  bool at_end() {
    if (!(line_ >> std::ws).eof()) return false;
    std::string raw;
    while (std::getline(is_, raw)) {
      ++lineno_;
      if (const auto p = raw.find_first_not_of(" \t\r"); p != std::string::npos && raw[p] != '#') return false;
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("line " + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::istream& is_;
  std::istringstream line_;
  std::string tok_;
  int lineno_ = 0;
};

}  // namespace

void write_realization(std::ostream& os, const bell::Realization& r) {
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  os << "realization " << r.dimA << ' ' << r.dimB << '\n';
  for (int k = 0; k < 3; ++k) write_block(os, "A" + std::to_string(k), r.A[static_cast<std::size_t>(k)]);
  for (int k = 0; k < 3; ++k) write_block(os, "B" + std::to_string(k), r.B[static_cast<std::size_t>(k)]);
  write_block(os, "state", r.state);
  os.flags(flags);
  os.precision(prec);
}

bell::Realization read_realization(std::istream& is) {
  Reader in(is);
  in.expect("realization");
  const int da = in.dimension();
  const int db = in.dimension();
  std::array<Matrix, 3> A, B;
  for (int k = 0; k < 3; ++k) A[static_cast<std::size_t>(k)] = in.block("A" + std::to_string(k), da);
  for (int k = 0; k < 3; ++k) B[static_cast<std::size_t>(k)] = in.block("B" + std::to_string(k), db);
  Matrix state = in.block("state", da * db);
  if (!in.at_end()) in.fail("trailing content after the state block");
  try {
    return bell::make_realization(std::move(A), std::move(B), std::move(state), bell::SupportCheck::skip);
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid realization: ") + e.what());
  }
}

void save_realization(const std::string& path, const bell::Realization& r) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_realization(os, r);
}

bell::Realization load_realization(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_realization(is);
}

}  // namespace selftest::io
