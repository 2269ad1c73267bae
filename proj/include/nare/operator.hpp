#pragma once

#include <memory>
#include <variant>

#include "nare/types.hpp"

namespace nare {

/// Square coefficient operator that is either dense or sparse. A transposed
/// view shares storage with its source, so a CARE problem can hold A = D^T
/// without copying and the solver layer can detect the sharing to reuse
/// factorizations across the two sides.
class SquareOperator {
 public:
  SquareOperator() = default;

  static SquareOperator Dense(Matrix m);
  static SquareOperator Sparse(SparseMatrix m);
  static SquareOperator Identity(Index n);
  /// Transposed view sharing the argument's storage.
  static SquareOperator TransposeOf(const SquareOperator& other);

  bool empty() const { return storage_ == nullptr; }
  Index rows() const;
  bool is_dense() const;
  bool is_transposed_view() const { return transposed_; }

  /// this * X
  Matrix apply(const Eigen::Ref<const Matrix>& x) const;
  /// X * this, i.e. (this^T * X^T)^T
  Matrix apply_right(const Eigen::Ref<const Matrix>& x) const;

  Matrix to_dense() const;
  SparseMatrix to_sparse() const;

  /// True when the two operators are transposes of one another by
  /// construction (shared storage, opposite orientation).
  static bool transpose_pair(const SquareOperator& a, const SquareOperator& b);

 private:
  using Storage = std::variant<Matrix, SparseMatrix>;
  std::shared_ptr<const Storage> storage_;
  bool transposed_ = false;
};

}  // namespace nare
