#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nare/operator.hpp"
#include "nare/types.hpp"

namespace nare {

/// Dense materialization is refused above this entry count.
inline constexpr Index kDenseGuard = 4'000'000;

enum class ProblemKind { plain, generalized, strengthened, weak, care };

/// Half-plane of lambda(D - C X) for a computed solution. The convention is
/// recorded, not asserted: M-matrix problems legitimately land in the right
/// half-plane.
enum class SolutionClass { stabilizing, anti_stabilizing, unknown };

/// The equation family X C X - X D - A X + B = 0 with B = LB*RB, C = LC*RC,
/// optional mass matrices (M . N on the quadratic/linear terms) and optional
/// low-rank offsets folded out of A and D:
///   strengthened:  A_true = A - LPhi*RC,          D_true = D - LC*RPhi
///   weak:          A_true = A - LPhi*RC - LA*RA,  D_true = D - LC*RPhi - LD*RD
/// For those kinds the stored A, D are the offset-free base operators.
struct NareProblem {
  SquareOperator A;  ///< m x m base operator
  SquareOperator D;  ///< n x n base operator
  Matrix LB, RB;     ///< m x p, p x n
  Matrix LC, RC;     ///< n x q, q x m
  SquareOperator M, N;  ///< empty => identity
  Matrix LPhi, RPhi;    ///< m x q, q x n (strengthened/weak)
  Matrix LA, RA;        ///< m x w, w x m (weak)
  Matrix LD, RD;        ///< n x w, w x n (weak)
  ProblemKind kind = ProblemKind::plain;

  Index m() const { return A.rows(); }
  Index n() const { return D.rows(); }
  Index p() const { return LB.cols(); }
  Index q() const { return LC.cols(); }
  Index w() const { return LA.cols(); }
  bool has_mass() const { return !M.empty() || !N.empty(); }
  bool has_offsets() const {
    return kind == ProblemKind::strengthened || kind == ProblemKind::weak;
  }

  /// Offset-free true coefficients, dense. Guarded by kDenseGuard.
  Matrix effective_a_dense() const;
  Matrix effective_d_dense() const;

  /// Mass-reduced ordinary-form coefficients (A <- M^-1 A_true, D <- A_true
  /// N^-1, LB <- M^-1 LB, RB <- RB N^-1), dense; identity masses pass through.
  struct ReducedDense {
    Matrix A, D, LB, RB, LC, RC;
  };
  ReducedDense reduced_dense() const;
};

struct DenseSolutionCandidate {
  Matrix X;
  SolutionClass classification = SolutionClass::unknown;
};

/// Empty iff every structural invariant holds; each violation names the field.
std::vector<std::string> validate(const NareProblem& problem);

/// Adapter for C^T C + A^T X + X A - X B B^T X = 0 (E^T X A + ... when Ecare
/// is given). A is stored as a transpose view of D so factorizations can be
/// shared between the two sides when alpha == beta.
NareProblem from_care(const SquareOperator& Acare, const Matrix& Bcare,
                      const Matrix& Ccare,
                      const std::optional<SquareOperator>& Ecare = {});

/// R(X) with the factored B, C; (M,N)-weighted form when masses are present.
/// Returns the residual matrix and its Frobenius norm.
std::pair<Matrix, double> residual_dense(const NareProblem& problem,
                                         const Eigen::Ref<const Matrix>& X);

/// [[D, -C], [B, -A]] on the mass-reduced coefficients; with Xshift the
/// congruence-shifted variant [[D-CX, -C], [R(X), -(A-XC)]].
Matrix hamiltonian(const NareProblem& problem,
                   const std::optional<Matrix>& Xshift = {});

/// Classify X by the extreme real part of lambda(D - C X) on the reduced
/// coefficients; |max Re| below band gives `unknown`.
SolutionClass classify_solution(const NareProblem& problem,
                                const Eigen::Ref<const Matrix>& X,
                                double band = 1e-10);

}  // namespace nare
