#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "nare/problem.hpp"
#include "nare/types.hpp"

// Dense, small-scale reference implementations of the Cayley-transform
// machinery: coefficient formulas, (flexible) fixed-point iterations, the
// block-Toeplitz closed forms, residual-factor closed forms, rational-function
// evaluation and a Schur-based ground-truth solver. Complex arithmetic is used
// freely here; this layer exists to test the real-arithmetic engine against.
namespace nare::oracle {

/// Generalized Cayley transform (alpha I + M)^{-1} (beta I - M).
ComplexMatrix cayley(const Eigen::Ref<const ComplexMatrix>& M, Complex alpha,
                     Complex beta);
Matrix cayley(const Eigen::Ref<const Matrix>& M, double alpha, double beta);

enum class RationalVariant { plain, over, under };

/// Product prod_{l=1..j} (beta_{i-l} - lambda)/(lambda + alpha_{i-l});
/// `over` divides by (lambda + alpha_{i-j-1}), `under` by (lambda + alpha_i).
Complex rational_value(const std::vector<ShiftPair>& shifts, int i, int j,
                       Complex lambda, RationalVariant variant);

/// Same shift list with the roles of alpha and beta exchanged.
std::vector<ShiftPair> swapped_shifts(const std::vector<ShiftPair>& shifts);

/// Omega_t diagonal: entry k is alpha_{t-1-k} + beta_{t-1-k}.
ComplexVector omega_diagonal(const std::vector<ShiftPair>& shifts, int t);
/// J_t diagonal: +1, -1, +1, ...
Vector alternating_signs(int t);
/// Lower-triangular P_t: diagonal alpha_{t-1-k}, column k below-diagonal
/// entries alpha_{t-1-k} + beta_{t-1-k}. Pass swapped shifts for P^{beta,alpha}.
ComplexMatrix p_matrix(const std::vector<ShiftPair>& shifts, int t);
/// Scalar T_t(lambda) assembled entrywise from the rational products.
ComplexMatrix t_matrix_scalar(const std::vector<ShiftPair>& shifts, int t,
                              Complex lambda);
/// Scalar V_t(lambda), the stack of `over` products.
ComplexVector v_vector_scalar(const std::vector<ShiftPair>& shifts, int t,
                              Complex lambda);

/// One shift's transformed coefficients: the direct E/F/G/H values plus the
/// scaled low-rank terms they decompose into.
struct CayleyCoefficients {
  ShiftPair shift;
  ComplexMatrix E0, F0, G0, H0;
  ComplexMatrix Atilde, Dtilde;  ///< C^{beta,alpha}(A), C^{alpha,beta}(D)
  ComplexMatrix Lb, Rb;          ///< A_beta^{-1} L^B, (a+b) R^B D_alpha^{-1}
  ComplexMatrix Lc, Rc;          ///< D_alpha^{-1} L^C, (a+b) R^C A_beta^{-1}
  ComplexMatrix Ya, Yd;          ///< R^C A_beta^{-1} L^B, R^B D_alpha^{-1} L^C
};

/// Throws AssumptionViolated naming the singular matrix when the shift
/// admissibility condition fails.
CayleyCoefficients cayley_coefficients(const NareProblem& problem,
                                       const ShiftPair& shift);

using FactorPair = std::pair<Matrix, Matrix>;  ///< (Gamma_A, Gamma_D)

/// Flexible fixed-point iteration X_{k+1} = H_k + F_k X_k (I-G_k X_k)^{-1} E_k
/// from X_0 = Gamma_A Gamma_D (zero when absent); returns X_1..X_t.
std::vector<ComplexMatrix> fixed_point_run(
    const NareProblem& problem, const std::vector<ShiftPair>& shifts, int t,
    const std::optional<FactorPair>& x0_factors = {});

struct ToeplitzFactors {
  ComplexMatrix UA;  ///< m x tp
  ComplexMatrix VD;  ///< tp x n
  ComplexMatrix UD;  ///< n x tq
  ComplexMatrix VA;  ///< tq x m
  ComplexMatrix TA;  ///< tq x tp
  ComplexMatrix TD;  ///< tp x tq
  ComplexVector omega;
  Vector jsigns;
  ComplexMatrix Pab, Pba;
  int t = 0;
  std::vector<ShiftPair> shifts;
  double mid_cond = 1.0;  ///< 1-norm condition estimate of I - TD TA
};

ToeplitzFactors toeplitz_factors(const NareProblem& problem,
                                 const std::vector<ShiftPair>& shifts, int t);

/// X_t = U^A_t (I - T^D_t T^A_t)^{-1} V^D_t, bordered with the
/// C_{t,t}(A) Gamma_A / Gamma_D C_{t,t}(D) blocks for a nonzero start.
ComplexMatrix closed_form_solution(
    const NareProblem& problem, const std::vector<ShiftPair>& shifts, int t,
    const std::optional<FactorPair>& x0_factors = {});

/// Closed-form residual factors (L^B_t, R^B_t) of R(X_t) for X_0 = 0.
std::pair<ComplexMatrix, ComplexMatrix> residual_factors_closed(
    const NareProblem& problem, const std::vector<ShiftPair>& shifts, int t);

struct StabilizingPair {
  Matrix X;  ///< m x n stabilizing solution
  Matrix Y;  ///< n x m dual stabilizing solution
  Matrix R;  ///< -C^{a,b}(D - C X)
  Matrix S;  ///< -C^{b,a}(A - B Y)
  double spec_radius_product = 0.0;  ///< rho(R) rho(S)
  SolutionClass classification = SolutionClass::unknown;
};

/// Ground truth by ordered complex Schur decomposition of the Hamiltonian:
/// the C_- invariant subspace [Z1; Z2] gives X = Z2 Z1^{-1}; the anti-stable
/// subspace gives the dual Y. R, S are assembled for `reference_shift` when
/// one is supplied.
StabilizingPair schur_stabilizing_solution(
    const NareProblem& problem,
    const std::optional<ShiftPair>& reference_shift = {},
    double axis_band = 1e-10);

}  // namespace nare::oracle
