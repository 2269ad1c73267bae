#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nare {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Where a shift pair came from; carried for logging and reproducibility.
enum class ShiftOrigin { leja, hamiltonian, user, conjugate_partner };

/// One Cayley parameter pair (alpha, beta). Flagged real when both imaginary
/// parts vanish relative to the pair's magnitude.
struct ShiftPair {
  Complex alpha{};
  Complex beta{};
  bool is_real = true;
  ShiftOrigin origin = ShiftOrigin::user;
};

inline double shift_imag_tol(Complex alpha, Complex beta) {
  return 1e-14 * (1.0 + std::abs(alpha) + std::abs(beta));
}

inline ShiftPair make_shift(Complex alpha, Complex beta,
                            ShiftOrigin origin = ShiftOrigin::user) {
  ShiftPair s{alpha, beta, false, origin};
  const double tol = shift_imag_tol(alpha, beta);
  s.is_real = std::abs(alpha.imag()) <= tol && std::abs(beta.imag()) <= tol;
  if (s.is_real) {
    s.alpha = Complex(alpha.real(), 0.0);
    s.beta = Complex(beta.real(), 0.0);
  }
  return s;
}

inline ShiftPair conjugate_shift(const ShiftPair& s) {
  ShiftPair c = s;
  c.alpha = std::conj(s.alpha);
  c.beta = std::conj(s.beta);
  c.origin = ShiftOrigin::conjugate_partner;
  return c;
}

/// alpha + beta must stay away from zero; Upsilon carries a 1/(alpha+beta) factor.
inline double pair_tol(const ShiftPair& s) {
  return 1e-12 * (1.0 + std::abs(s.alpha) + std::abs(s.beta));
}

struct NareError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// base + shift*mass has an exact zero pivot.
struct SingularShift : NareError {
  using NareError::NareError;
};

/// Factorization succeeded but the 1-norm condition estimate is unusable.
struct IllConditionedShift : NareError {
  explicit IllConditionedShift(double cond)
      : NareError("shifted factorization ill-conditioned, cond estimate " +
                  std::to_string(cond)),
        cond_estimate(cond) {}
  double cond_estimate;
};

/// One of the matrices required nonsingular by the shift admissibility
/// assumption is singular; carries the name of the offending matrix.
struct AssumptionViolated : NareError {
  explicit AssumptionViolated(const std::string& which)
      : NareError("assumption violated: " + which + " is singular"),
        matrix_name(which) {}
  std::string matrix_name;
};

/// I - G_t X_t (or the Toeplitz midblock) became numerically singular.
struct IterationBreakdown : NareError {
  explicit IterationBreakdown(int step)
      : NareError("iteration breakdown at step " + std::to_string(step)),
        step_index(step) {}
  int step_index;
};

/// Rational function evaluated at (or numerically on top of) a pole.
struct PoleHit : NareError {
  using NareError::NareError;
};

/// Eigenvalues of the Hamiltonian sit inside the axis tolerance band, or the
/// stable/anti-stable counts do not split as n/m.
struct NoSplitting : NareError {
  using NareError::NareError;
};

/// The leading block of the invariant-subspace basis is singular.
struct SingularBasis : NareError {
  using NareError::NareError;
};

/// A shift generator was handed an empty candidate class.
struct EmptyCandidates : NareError {
  using NareError::NareError;
};

/// Every queued shift candidate failed the factorization probe.
struct NoValidShift : NareError {
  using NareError::NareError;
};

/// Upsilon factorization broke down; the offending shift must be rejected.
struct SingularUpsilon : NareError {
  using NareError::NareError;
};

/// |alpha+beta|^2 - 4 Im(alpha) Im(beta) vanished; the real-arithmetic double
/// step is not defined for this pair.
struct DegeneratePsi : NareError {
  using NareError::NareError;
};

/// Dense materialization refused because m*n exceeds the configured guard.
struct SizeGuardExceeded : NareError {
  using NareError::NareError;
};

struct DimensionMismatch : NareError {
  using NareError::NareError;
};

}  // namespace nare
