#pragma once

#include <random>

#include "selftest/linalg.hpp"

// Seeded generators for randomized property checks and validation sweeps.
namespace selftest::random {

using Rng = std::mt19937_64;

linalg::Matrix ginibre(Rng& rng, int rows, int cols);
linalg::Matrix unitary(Rng& rng, int d);
linalg::Matrix hermitian(Rng& rng, int d);
/// Haar-random eigenbasis with eigenvalues +-1 (both signs present when d >= 2).
linalg::Matrix involution(Rng& rng, int d);
/// Random Hermitian contraction: eigenvalues uniform in [-1, 1].
linalg::Matrix contraction(Rng& rng, int d);
/// Full-rank density matrix of the given rank (rank <= 0 means full).
linalg::Matrix density(Rng& rng, int d, int rank = 0);
linalg::Vector pure_state(Rng& rng, int d);

}  // namespace selftest::random
