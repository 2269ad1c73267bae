#include "nare/generators.hpp"

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace nare {

namespace {

/// Platform-stable uniform in (0,1): 53 mantissa bits straight from the
/// engine, never the distribution templates.
struct Uniform {
  std::mt19937_64 eng;
  explicit Uniform(std::uint64_t seed) : eng(seed) {}
  double next() {
    double u;
    do {
      u = double(eng() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
  }
  double symmetric() { return 2.0 * next() - 1.0; }
};

}  // namespace

NareProblem gen_transport(TransportParams params) {
  const Index n = params.n;
  if (n < 1) throw NareError("gen_transport: n must be positive");
  if (!(params.c_alpha >= 0.0 && params.c_alpha < 1.0))
    throw NareError("gen_transport: c_alpha must lie in [0, 1)");
  if (!(params.c_beta > 0.0 && params.c_beta <= 1.0))
    throw NareError("gen_transport: c_beta must lie in (0, 1]");

  Uniform rng(params.seed);
  if (params.omega.size() == 0) {
    std::vector<double> w(n);
    for (auto& v : w) v = rng.next();
    std::sort(w.begin(), w.end(), std::greater<double>());
    for (Index i = 1; i < n; ++i)  // break exact ties
      if (w[i] >= w[i - 1]) w[i] = w[i - 1] - 1e-12;
    params.omega = Eigen::Map<Vector>(w.data(), n);
  }
  if (params.c.size() == 0) {
    params.c.resize(n);
    for (Index i = 0; i < n; ++i) params.c(i) = rng.next();
    params.c /= params.c.sum();
  }
  if (params.omega.size() != n || params.c.size() != n)
    throw NareError("gen_transport: omega/c length mismatch");
  for (Index i = 0; i < n; ++i) {
    if (!(params.omega(i) > 0.0 && params.omega(i) < 1.0))
      throw NareError("gen_transport: omega must lie in (0, 1)");
    if (i > 0 && !(params.omega(i) < params.omega(i - 1)))
      throw NareError("gen_transport: omega must decrease strictly");
    if (!(params.c(i) > 0.0)) throw NareError("gen_transport: c must be positive");
  }

  const Vector inv_omega = params.omega.cwiseInverse();
  const Vector q = 0.5 * inv_omega.cwiseProduct(params.c);

  SparseMatrix aprime(n, n), dprime(n, n);
  aprime.reserve(Eigen::VectorXi::Constant(n, 1));
  dprime.reserve(Eigen::VectorXi::Constant(n, 1));
  const double fa = 1.0 / (params.c_beta * (1.0 + params.c_alpha));
  const double fd = 1.0 / (params.c_beta * (1.0 - params.c_alpha));
  for (Index i = 0; i < n; ++i) {
    aprime.insert(i, i) = fa * inv_omega(i);
    dprime.insert(i, i) = fd * inv_omega(i);
  }
  aprime.makeCompressed();
  dprime.makeCompressed();

  NareProblem pr;
  pr.kind = ProblemKind::strengthened;
  pr.A = SquareOperator::Sparse(std::move(aprime));
  pr.D = SquareOperator::Sparse(std::move(dprime));
  pr.LB = Matrix::Ones(n, 1);
  pr.RB = Matrix::Ones(1, n);
  pr.LC = q;
  pr.RC = q.transpose();
  pr.LPhi = Matrix::Ones(n, 1);
  pr.RPhi = Matrix::Ones(1, n);
  return pr;
}

namespace {

SparseMatrix random_stable_sparse(Index n, double density, Uniform& rng) {
  std::vector<Eigen::Triplet<double>> trip;
  Vector rowsum = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.next() > density) continue;
      const double v = rng.symmetric();
      trip.emplace_back(i, j, v);
      rowsum(i) += std::abs(v);
    }
  for (Index i = 0; i < n; ++i)
    trip.emplace_back(i, i, -(rowsum(i) + 0.5 + rng.next()));
  SparseMatrix s(n, n);
  s.setFromTriplets(trip.begin(), trip.end());
  s.makeCompressed();
  return s;
}

Matrix random_dense(Index r, Index c, double scale, Uniform& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = scale * rng.symmetric();
  return m;
}

bool split_verified(const NareProblem& pr) {
  const Matrix h = hamiltonian(pr);
  const double band = 1e-10 * std::max(1.0, h.norm());
  Eigen::EigenSolver<Matrix> es(h, false);
  Index stable = 0, anti = 0;
  for (Index i = 0; i < h.rows(); ++i) {
    const double re = es.eigenvalues()(i).real();
    if (re < -band)
      ++stable;
    else if (re > band)
      ++anti;
    else
      return false;
  }
  return stable == pr.n() && anti == pr.m();
}

}  // namespace

NareProblem gen_random_stable(Index m, Index n, Index p, Index q,
                              double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0))
    throw NareError("gen_random_stable: density must lie in (0, 1]");
  if (m < 1 || n < 1 || p < 1 || q < 1)
    throw NareError("gen_random_stable: dimensions must be positive");
  Uniform rng(seed);

  NareProblem pr;
  pr.kind = ProblemKind::plain;
  pr.A = SquareOperator::Sparse(random_stable_sparse(m, density, rng));
  pr.D = SquareOperator::Sparse(random_stable_sparse(n, density, rng));
  double scale = 0.1 / std::sqrt(double(std::max(m, n)));
  pr.LB = random_dense(m, p, 1.0, rng);
  pr.RB = random_dense(p, n, 1.0, rng);
  pr.LC = random_dense(n, q, 1.0, rng);
  pr.RC = random_dense(q, m, 1.0, rng);

  // A and D are strictly stable by construction; the low-rank terms are
  // shrunk until the Hamiltonian split is certified (dense check at small
  // sizes only).
  const bool verify = (m <= 100 && n <= 100);
  for (int attempt = 0; attempt < 8; ++attempt) {
    NareProblem candidate = pr;
    candidate.LB *= scale;
    candidate.LC *= scale;
    if (!verify || split_verified(candidate)) {
      pr = candidate;
      return pr;
    }
    scale *= 0.25;
  }
  throw NareError("gen_random_stable: could not certify the eigenvalue split");
}

NareProblem gen_nash(const NareProblem& base, std::uint64_t seed) {
  if (base.kind != ProblemKind::care)
    throw NareError("gen_nash: base problem must be a CARE adapter");
  Uniform rng(seed);
  const Index n = base.n();
  const Matrix b1 = base.LC;  // CARE input B
  const Matrix c1 = base.RB;  // CARE input C

  auto patterned = [&rng](const Matrix& src) {
    const double scale = src.cwiseAbs().maxCoeff();
    Matrix out = Matrix::Zero(src.rows(), src.cols());
    for (Index j = 0; j < src.cols(); ++j)
      for (Index i = 0; i < src.rows(); ++i)
        if (src(i, j) != 0.0) out(i, j) = scale * rng.next();
    return out;
  };
  const Matrix b2 = patterned(b1);
  const Matrix c2 = patterned(c1);
  const Index p1 = c1.rows(), p2 = c2.rows();
  const Index q1 = b1.cols(), q2 = b2.cols();

  auto blkdiag2 = [](const SparseMatrix& s) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * s.nonZeros());
    const Index nn = s.rows();
    for (Index c = 0; c < s.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
        trip.emplace_back(it.row(), it.col(), it.value());
        trip.emplace_back(it.row() + nn, it.col() + nn, it.value());
      }
    SparseMatrix out(2 * nn, 2 * nn);
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
  };

  NareProblem pr;
  pr.kind = base.has_mass() ? ProblemKind::generalized : ProblemKind::plain;
  pr.A = SquareOperator::Sparse(blkdiag2(base.A.to_sparse()));
  pr.D = base.D;
  pr.LB = Matrix::Zero(2 * n, p1 + p2);
  pr.LB.topLeftCorner(n, p1) = -c1.transpose();
  pr.LB.bottomRightCorner(n, p2) = -c2.transpose();
  pr.RB = Matrix(p1 + p2, n);
  pr.RB.topRows(p1) = c1;
  pr.RB.bottomRows(p2) = c2;
  pr.LC = Matrix(n, q1 + q2);
  pr.LC.leftCols(q1) = b1;
  pr.LC.rightCols(q2) = b2;
  pr.RC = Matrix::Zero(q1 + q2, 2 * n);
  pr.RC.topLeftCorner(q1, n) = b1.transpose();
  pr.RC.bottomRightCorner(q2, n) = b2.transpose();
  if (base.has_mass()) {
    pr.N = base.N;
    pr.M = SquareOperator::Sparse(blkdiag2(base.M.to_sparse()));
  }
  return pr;
}

}  // namespace nare
