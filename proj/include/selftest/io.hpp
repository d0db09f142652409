#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "selftest/bell.hpp"

// Plain-text realization files:
//
//   realization <dimA> <dimB>
//   A0            followed by dimA rows of dimA "re im" pairs
//   A1, A2, B0, B1, B2 likewise (B blocks have dimB rows)
//   state         followed by dimA*dimB rows
//
// Blank lines and lines starting with '#' are ignored. Values are written with 17 significant digits.
namespace selftest::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_realization(std::ostream& os, const bell::Realization& r);
/// Throws FormatError on malformed input; the observables are not required to be projective.
bell::Realization read_realization(std::istream& is);

void save_realization(const std::string& path, const bell::Realization& r);
bell::Realization load_realization(const std::string& path);

}  // namespace selftest::io
