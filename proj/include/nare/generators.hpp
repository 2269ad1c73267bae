#pragma once

#include <cstdint>

#include "nare/problem.hpp"

namespace nare {

/// One-group neutron transport parameters. omega and c are generated from the
/// seed when left empty: omega as sorted decreasing uniforms in (0,1), c as
/// normalized positive uniforms.
struct TransportParams {
  Index n = 0;
  double c_alpha = 0.5;  ///< in [0, 1)
  double c_beta = 1.0;   ///< in (0, 1]
  std::uint64_t seed = 0;
  Vector omega;  ///< 1 > omega_1 > ... > omega_n > 0
  Vector c;      ///< c_i > 0, sum = 1
};

/// Strengthened-structure transport problem with diagonal base operators:
/// A = Omega^{-1}/(c_beta (1+c_alpha)) - 1 q^T, D = .../(1-c_alpha) - q 1^T,
/// B = 1 1^T, C = q q^T, carried as A' - LPhi RC / D' - LC RPhi with p = q = 1.
NareProblem gen_transport(TransportParams params);

/// Sparse A, D made strictly stable by Gershgorin-dominant diagonals, dense
/// low-rank factors scaled so the Hamiltonian keeps an exact n/m split
/// (verified densely up to m, n <= 100). Deterministic in the seed.
NareProblem gen_random_stable(Index m, Index n, Index p, Index q,
                              double density, std::uint64_t seed);

/// Two-player open-loop Nash stacking of a CARE problem: the second player's
/// factors copy the first player's sparsity pattern with fresh values scaled
/// by the largest entry. Only the player-2 factors depend on the seed.
NareProblem gen_nash(const NareProblem& base, std::uint64_t seed);

}  // namespace nare
