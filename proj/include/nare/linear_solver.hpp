#pragma once

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "nare/operator.hpp"
#include "nare/types.hpp"

namespace nare {

enum class Side { A_side, D_side };
enum class FactorMode { real, complex_block };

/// Immutable factorization of base + shift*mass (real shift) or of the
/// doubled real block system
///   A side:  [[base + Re(s) mass, -Im(s) mass], [ Im(s) mass, base + Re(s) mass]]
///   D side:  [[base + Re(s) mass,  Im(s) mass], [-Im(s) mass, base + Re(s) mass]]
/// for nonreal shifts. Solving never mutates the handle.
class ShiftedFactorization {
 public:
  ShiftedFactorization(const SquareOperator& base,
                       const std::optional<SquareOperator>& mass, Complex shift,
                       Side side,
                       const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>*
                           reused_ordering = nullptr);
  ~ShiftedFactorization();
  ShiftedFactorization(const ShiftedFactorization&) = delete;
  ShiftedFactorization& operator=(const ShiftedFactorization&) = delete;

  Side side() const { return side_; }
  Complex shift() const { return shift_; }
  FactorMode mode() const { return mode_; }
  double cond_estimate() const { return cond_estimate_; }
  Index base_rows() const { return base_rows_; }
  /// base_rows for real mode, 2*base_rows for complex_block.
  Index system_rows() const { return system_rows_; }

  /// K^{-1} * rhs on the factored system K.
  Matrix solve(const Eigen::Ref<const Matrix>& rhs) const;
  /// K^{-T} * rhs.
  Matrix solve_transposed(const Eigen::Ref<const Matrix>& rhs) const;

  /// Column ordering used by the sparse path (empty for dense), exposed so a
  /// caching service can reuse the fill-reducing analysis across shifts.
  const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>* ordering() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Side side_;
  Complex shift_;
  FactorMode mode_;
  Index base_rows_ = 0;
  Index system_rows_ = 0;
  double cond_estimate_ = 1.0;
};

using FactorizationPtr = std::shared_ptr<const ShiftedFactorization>;

/// Handle a caller solves through. `shared_transpose` marks a factorization
/// borrowed from the opposite side of a CARE problem (K there equals this
/// side's matrix transposed), which flips the solve direction.
struct SideHandle {
  FactorizationPtr fac;
  Side side = Side::A_side;
  bool shared_transpose = false;

  bool valid() const { return fac != nullptr; }
  FactorMode mode() const { return fac->mode(); }
  double cond_estimate() const { return fac->cond_estimate(); }
};

/// Factor base + shift*mass (or the doubled block system for nonreal shift).
/// Throws SingularShift on an exact zero pivot and IllConditionedShift when
/// the 1-norm condition estimate exceeds 1/(100 eps).
SideHandle factor_shifted(const SquareOperator& base,
                          const std::optional<SquareOperator>& mass,
                          Complex shift, Side side);

/// A-side solve (A + beta M)^{-1} RHS. In complex_block mode RHS has
/// base_rows rows, is stacked internally as [RHS; 0], and the result carries
/// the real parts on top of the imaginary parts (2m x k).
Matrix solve_columns(const SideHandle& f, const Eigen::Ref<const Matrix>& rhs);

/// D-side solve LHS (D + alpha N)^{-1}. In complex_block mode LHS is padded
/// to [LHS, 0] and the result is [Re, Im] side by side (k x 2n).
Matrix solve_rows(const SideHandle& f, const Eigen::Ref<const Matrix>& lhs);

/// Per-problem factorization service: LRU cache keyed by (side, shift)
/// with the shift rounded to 1e-15 relative, one fill-reducing ordering per
/// (side, mode) reused across shifts, and transparent sharing of one
/// factorization between the two sides of a CARE problem when alpha == beta.
/// Accumulates wall time spent factoring and solving.
class ShiftedSolverService {
 public:
  ShiftedSolverService(const SquareOperator& a_base,
                       const std::optional<SquareOperator>& a_mass,
                       const SquareOperator& d_base,
                       const std::optional<SquareOperator>& d_mass,
                       std::size_t capacity = 8);

  /// Cached factorization for (side, shift); same key returns the identical
  /// handle.
  SideHandle factor(Side side, Complex shift);

  Matrix solve_columns(const SideHandle& f, const Eigen::Ref<const Matrix>& rhs);
  Matrix solve_rows(const SideHandle& f, const Eigen::Ref<const Matrix>& lhs);

  bool care_sharing() const { return care_sharing_; }
  double seconds() const { return seconds_; }

 private:
  struct CacheEntry {
    std::list<std::string>::iterator lru_pos;
    FactorizationPtr fac;
  };

  SideHandle factor_locked(Side side, Complex shift);

  SquareOperator a_base_, d_base_;
  std::optional<SquareOperator> a_mass_, d_mass_;
  bool care_sharing_ = false;
  std::size_t capacity_;
  std::list<std::string> lru_;
  std::unordered_map<std::string, CacheEntry> cache_;
  // one ordering per (side, mode), lazily filled
  std::unique_ptr<Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>>
      orderings_[2][2];
  std::mutex mutex_;
  std::atomic<double> seconds_ = 0.0;
};

}  // namespace nare
