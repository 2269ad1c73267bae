#include "nare/operator.hpp"

namespace nare {

SquareOperator SquareOperator::Dense(Matrix m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("operator must be square");
  SquareOperator op;
  op.storage_ = std::make_shared<const Storage>(std::move(m));
  return op;
}

SquareOperator SquareOperator::Sparse(SparseMatrix m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("operator must be square");
  m.makeCompressed();
  SquareOperator op;
  op.storage_ = std::make_shared<const Storage>(std::move(m));
  return op;
}

SquareOperator SquareOperator::Identity(Index n) {
  SparseMatrix eye(n, n);
  eye.setIdentity();
  return Sparse(std::move(eye));
}

SquareOperator SquareOperator::TransposeOf(const SquareOperator& other) {
  SquareOperator op = other;
  op.transposed_ = !other.transposed_;
  return op;
}

Index SquareOperator::rows() const {
  if (empty()) return 0;
  return std::visit([](const auto& m) { return m.rows(); }, *storage_);
}

bool SquareOperator::is_dense() const {
  return storage_ && std::holds_alternative<Matrix>(*storage_);
}

Matrix SquareOperator::apply(const Eigen::Ref<const Matrix>& x) const {
  return std::visit(
      [&](const auto& m) -> Matrix {
        if (transposed_) return m.transpose() * x;
        return m * x;
      },
      *storage_);
}

Matrix SquareOperator::apply_right(const Eigen::Ref<const Matrix>& x) const {
  return std::visit(
      [&](const auto& m) -> Matrix {
        if (transposed_) return (m * x.transpose()).transpose();
        return (m.transpose() * x.transpose()).transpose();
      },
      *storage_);
}

Matrix SquareOperator::to_dense() const {
  return std::visit(
      [&](const auto& m) -> Matrix {
        Matrix d = Matrix(m);
        if (transposed_) return d.transpose();
        return d;
      },
      *storage_);
}

SparseMatrix SquareOperator::to_sparse() const {
  if (is_dense()) {
    SparseMatrix s = to_dense().sparseView();
    s.makeCompressed();
    return s;
  }
  const auto& m = std::get<SparseMatrix>(*storage_);
  if (transposed_) {
    SparseMatrix s = m.transpose();
    s.makeCompressed();
    return s;
  }
  return m;
}

bool SquareOperator::transpose_pair(const SquareOperator& a,
                                    const SquareOperator& b) {
  return a.storage_ && a.storage_ == b.storage_ &&
         a.transposed_ != b.transposed_;
}

}  // namespace nare
