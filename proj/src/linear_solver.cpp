#include "nare/linear_solver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace nare {

namespace {

using Perm = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool needs_block(Complex shift) {
  return std::abs(shift.imag()) > 1e-14 * (1.0 + std::abs(shift));
}

Matrix assemble_dense(const SquareOperator& base,
                      const std::optional<SquareOperator>& mass, Complex shift,
                      Side side, FactorMode mode) {
  const Index n = base.rows();
  Matrix b = base.to_dense();
  if (mode == FactorMode::real) {
    if (mass)
      b += shift.real() * mass->to_dense();
    else
      b.diagonal().array() += shift.real();
    return b;
  }
  Matrix mm = mass ? mass->to_dense() : Matrix(Matrix::Identity(n, n));
  Matrix diag = b + shift.real() * mm;
  // top-right block carries -Im(s) M on the A side, +Im(s) N on the D side
  const double im = (side == Side::A_side) ? -shift.imag() : shift.imag();
  Matrix k(2 * n, 2 * n);
  k.topLeftCorner(n, n) = diag;
  k.bottomRightCorner(n, n) = diag;
  k.topRightCorner(n, n) = im * mm;
  k.bottomLeftCorner(n, n) = -im * mm;
  return k;
}

SparseMatrix assemble_sparse(const SquareOperator& base,
                             const std::optional<SquareOperator>& mass,
                             Complex shift, Side side, FactorMode mode) {
  const Index n = base.rows();
  const SparseMatrix b = base.to_sparse();
  SparseMatrix m;
  if (mass) m = mass->to_sparse();

  std::vector<Eigen::Triplet<double>> trip;
  const Index mass_nnz = mass ? m.nonZeros() : n;
  trip.reserve(mode == FactorMode::real ? b.nonZeros() + mass_nnz
                                        : 2 * (b.nonZeros() + 2 * mass_nnz));

  auto add_op = [&trip](const SparseMatrix& s, double scale, Index roff,
                        Index coff) {
    for (Index c = 0; c < s.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(s, c); it; ++it)
        trip.emplace_back(it.row() + roff, it.col() + coff, scale * it.value());
  };
  auto add_diag = [&trip, n](double scale, Index roff, Index coff) {
    for (Index i = 0; i < n; ++i) trip.emplace_back(i + roff, i + coff, scale);
  };
  auto add_mass = [&](double scale, Index roff, Index coff) {
    if (mass)
      add_op(m, scale, roff, coff);
    else
      add_diag(scale, roff, coff);
  };

  Index dim = n;
  if (mode == FactorMode::real) {
    add_op(b, 1.0, 0, 0);
    add_mass(shift.real(), 0, 0);
  } else {
    dim = 2 * n;
    const double im = (side == Side::A_side) ? -shift.imag() : shift.imag();
    for (Index roff : {Index(0), n}) {
      add_op(b, 1.0, roff, roff);
      add_mass(shift.real(), roff, roff);
    }
    add_mass(im, 0, n);
    add_mass(-im, n, 0);
  }
  SparseMatrix k(dim, dim);
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  return k;
}

double one_norm(const Matrix& k) {
  return k.cwiseAbs().colwise().sum().maxCoeff();
}

double one_norm(const SparseMatrix& k) {
  double best = 0.0;
  for (Index c = 0; c < k.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(k, c); it; ++it)
      s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

struct ShiftedFactorization::Impl {
  std::optional<Eigen::PartialPivLU<Matrix>> dense;
  std::optional<Eigen::SparseLU<SparseMatrix, Eigen::NaturalOrdering<int>>> sparse;
  SparseMatrix kp;  // permuted sparse system, kept while the factors live
  Perm perm;
};

ShiftedFactorization::ShiftedFactorization(
    const SquareOperator& base, const std::optional<SquareOperator>& mass,
    Complex shift, Side side, const Perm* reused_ordering)
    : impl_(std::make_unique<Impl>()), side_(side), shift_(shift) {
  if (mass && mass->rows() != base.rows())
    throw DimensionMismatch("mass operator dimension does not match base");
  mode_ = needs_block(shift) ? FactorMode::complex_block : FactorMode::real;
  base_rows_ = base.rows();
  system_rows_ = mode_ == FactorMode::real ? base_rows_ : 2 * base_rows_;

  const bool dense = base.is_dense() || (mass && mass->is_dense());
  double norm_k = 0.0;
  if (dense) {
    Matrix k = assemble_dense(base, mass, shift, side, mode_);
    norm_k = one_norm(k);
    impl_->dense.emplace(k);
    const double min_piv =
        impl_->dense->matrixLU().diagonal().cwiseAbs().minCoeff();
    if (min_piv == 0.0 || !std::isfinite(min_piv))
      throw SingularShift("shifted system has an exact zero pivot");
  } else {
    SparseMatrix k = assemble_sparse(base, mass, shift, side, mode_);
    norm_k = one_norm(k);
    if (reused_ordering) {
      impl_->perm = *reused_ordering;
    } else {
      Eigen::COLAMDOrdering<int> colamd;
      SparseMatrix pattern = k;  // ordering mutates nothing but wants compressed
      colamd(pattern, impl_->perm);
    }
    impl_->kp = k * impl_->perm;
    impl_->kp.makeCompressed();
    impl_->sparse.emplace();
    impl_->sparse->analyzePattern(impl_->kp);
    impl_->sparse->factorize(impl_->kp);
    if (impl_->sparse->info() != Eigen::Success)
      throw SingularShift("sparse shifted system is singular");
  }

  // Hager-style estimate of ||K^{-1}||_1 using the factors just computed.
  const Index nsys = system_rows_;
  Vector x = Vector::Constant(nsys, 1.0 / double(nsys));
  double inv_est = 0.0;
  for (int it = 0; it < 5; ++it) {
    Vector y = solve(x);
    inv_est = y.lpNorm<1>();
    if (!std::isfinite(inv_est)) {
      inv_est = std::numeric_limits<double>::infinity();
      break;
    }
    Vector xi = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    Vector z = solve_transposed(xi);
    Index j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (!(zmax > z.dot(x))) break;
    x.setZero();
    x(j) = 1.0;
  }
  cond_estimate_ = std::max(1.0, norm_k * inv_est);
  const double limit = 1.0 / (100.0 * std::numeric_limits<double>::epsilon());
  if (!(cond_estimate_ <= limit)) throw IllConditionedShift(cond_estimate_);
}

ShiftedFactorization::~ShiftedFactorization() = default;

Matrix ShiftedFactorization::solve(const Eigen::Ref<const Matrix>& rhs) const {
  if (rhs.rows() != system_rows_)
    throw DimensionMismatch("solve: RHS row count mismatch");
  if (impl_->dense) return impl_->dense->solve(rhs);
  return impl_->perm * impl_->sparse->solve(rhs).eval();
}

Matrix ShiftedFactorization::solve_transposed(
    const Eigen::Ref<const Matrix>& rhs) const {
  if (rhs.rows() != system_rows_)
    throw DimensionMismatch("solve_transposed: RHS row count mismatch");
  if (impl_->dense) return impl_->dense->transpose().solve(rhs);
  Matrix permuted = impl_->perm.transpose() * rhs;
  return impl_->sparse->transpose().solve(permuted);
}

const Perm* ShiftedFactorization::ordering() const {
  return impl_->sparse ? &impl_->perm : nullptr;
}

SideHandle factor_shifted(const SquareOperator& base,
                          const std::optional<SquareOperator>& mass,
                          Complex shift, Side side) {
  return SideHandle{
      std::make_shared<const ShiftedFactorization>(base, mass, shift, side),
      side, false};
}

Matrix solve_columns(const SideHandle& f, const Eigen::Ref<const Matrix>& rhs) {
  if (!f.valid() || f.side != Side::A_side)
    throw NareError("solve_columns requires an A-side handle");
  const auto& fac = *f.fac;
  if (fac.mode() == FactorMode::real) {
    if (rhs.rows() != fac.base_rows())
      throw DimensionMismatch("solve_columns: RHS row count mismatch");
    return f.shared_transpose ? fac.solve_transposed(rhs) : fac.solve(rhs);
  }
  if (rhs.rows() != fac.base_rows())
    throw DimensionMismatch("solve_columns: RHS row count mismatch");
  Matrix stacked = Matrix::Zero(2 * fac.base_rows(), rhs.cols());
  stacked.topRows(fac.base_rows()) = rhs;
  return f.shared_transpose ? fac.solve_transposed(stacked)
                            : fac.solve(stacked);
}

Matrix solve_rows(const SideHandle& f, const Eigen::Ref<const Matrix>& lhs) {
  if (!f.valid() || f.side != Side::D_side)
    throw NareError("solve_rows requires a D-side handle");
  const auto& fac = *f.fac;
  if (lhs.cols() != fac.base_rows())
    throw DimensionMismatch("solve_rows: LHS column count mismatch");
  if (fac.mode() == FactorMode::real) {
    Matrix t = lhs.transpose();
    Matrix sol = f.shared_transpose ? fac.solve(t) : fac.solve_transposed(t);
    return sol.transpose();
  }
  Matrix stacked = Matrix::Zero(2 * fac.base_rows(), lhs.rows());
  stacked.topRows(fac.base_rows()) = lhs.transpose();
  Matrix sol =
      f.shared_transpose ? fac.solve(stacked) : fac.solve_transposed(stacked);
  return sol.transpose();
}

ShiftedSolverService::ShiftedSolverService(
    const SquareOperator& a_base, const std::optional<SquareOperator>& a_mass,
    const SquareOperator& d_base, const std::optional<SquareOperator>& d_mass,
    std::size_t capacity)
    : a_base_(a_base),
      d_base_(d_base),
      a_mass_(a_mass),
      d_mass_(d_mass),
      capacity_(capacity == 0 ? 1 : capacity) {
  const bool bases_paired = SquareOperator::transpose_pair(a_base_, d_base_);
  const bool masses_paired =
      (!a_mass_ && !d_mass_) ||
      (a_mass_ && d_mass_ && SquareOperator::transpose_pair(*a_mass_, *d_mass_));
  care_sharing_ = bases_paired && masses_paired;
}

SideHandle ShiftedSolverService::factor(Side side, Complex shift) {
  const auto t0 = Clock::now();
  std::lock_guard<std::mutex> lock(mutex_);
  SideHandle h = factor_locked(side, shift);
  seconds_.fetch_add(seconds_since(t0), std::memory_order_relaxed);
  return h;
}

SideHandle ShiftedSolverService::factor_locked(Side side, Complex shift) {
  // With a transpose-paired problem every request is served from the A side:
  // (D + alpha N) = (A + alpha M)^T, so one factorization covers both.
  Side assembled_side = side;
  bool shared = false;
  if (care_sharing_ && side == Side::D_side) {
    assembled_side = Side::A_side;
    shared = true;
  }

  char key[80];
  std::snprintf(key, sizeof(key), "%d|%.15e|%.15e",
                static_cast<int>(assembled_side), shift.real(), shift.imag());
  const std::string k(key);

  auto it = cache_.find(k);
  if (it != cache_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
    return SideHandle{it->second.fac, side, shared};
  }

  const SquareOperator& base =
      assembled_side == Side::A_side ? a_base_ : d_base_;
  const auto& mass = assembled_side == Side::A_side ? a_mass_ : d_mass_;
  const int mode_idx = needs_block(shift) ? 1 : 0;
  const int side_idx = assembled_side == Side::A_side ? 0 : 1;
  const Perm* reuse = orderings_[side_idx][mode_idx].get();

  auto fac = std::make_shared<const ShiftedFactorization>(base, mass, shift,
                                                          assembled_side, reuse);
  if (!reuse && fac->ordering())
    orderings_[side_idx][mode_idx] = std::make_unique<Perm>(*fac->ordering());

  lru_.push_front(k);
  cache_[k] = CacheEntry{lru_.begin(), fac};
  while (cache_.size() > capacity_) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  return SideHandle{fac, side, shared};
}

Matrix ShiftedSolverService::solve_columns(const SideHandle& f,
                                           const Eigen::Ref<const Matrix>& rhs) {
  const auto t0 = Clock::now();
  Matrix out = nare::solve_columns(f, rhs);
  seconds_.fetch_add(seconds_since(t0), std::memory_order_relaxed);
  return out;
}

Matrix ShiftedSolverService::solve_rows(const SideHandle& f,
                                        const Eigen::Ref<const Matrix>& lhs) {
  const auto t0 = Clock::now();
  Matrix out = nare::solve_rows(f, lhs);
  seconds_.fetch_add(seconds_since(t0), std::memory_order_relaxed);
  return out;
}

}  // namespace nare
