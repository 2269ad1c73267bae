#include "nare/problem.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nare/linear_solver.hpp"

namespace nare {

namespace {

void check_dense_guard(Index rows, Index cols, const char* what) {
  if (rows * cols > kDenseGuard)
    throw SizeGuardExceeded(std::string(what) + ": " + std::to_string(rows) +
                            "x" + std::to_string(cols) +
                            " exceeds the dense size guard");
}

}  // namespace

Matrix NareProblem::effective_a_dense() const {
  check_dense_guard(m(), m(), "effective A");
  Matrix a = A.to_dense();
  if (LPhi.size() > 0) a -= LPhi * RC;
  if (LA.size() > 0) a -= LA * RA;
  return a;
}

Matrix NareProblem::effective_d_dense() const {
  check_dense_guard(n(), n(), "effective D");
  Matrix d = D.to_dense();
  if (RPhi.size() > 0) d -= LC * RPhi;
  if (LD.size() > 0) d -= LD * RD;
  return d;
}

NareProblem::ReducedDense NareProblem::reduced_dense() const {
  ReducedDense r;
  r.A = effective_a_dense();
  r.D = effective_d_dense();
  r.LB = LB;
  r.RB = RB;
  r.LC = LC;
  r.RC = RC;
  if (!M.empty()) {
    Eigen::PartialPivLU<Matrix> lu(M.to_dense());
    r.A = lu.solve(r.A);
    r.LB = lu.solve(r.LB);
  }
  if (!N.empty()) {
    Eigen::PartialPivLU<Matrix> lu(N.to_dense());
    r.D = lu.transpose().solve(r.D.transpose()).transpose();
    r.RB = lu.transpose().solve(r.RB.transpose()).transpose();
  }
  return r;
}

std::vector<std::string> validate(const NareProblem& pr) {
  std::vector<std::string> out;
  if (pr.A.empty()) out.push_back("A is missing");
  if (pr.D.empty()) out.push_back("D is missing");
  if (pr.A.empty() || pr.D.empty()) return out;

  const Index m = pr.m(), n = pr.n();
  if (pr.LB.rows() != m) out.push_back("LB row count does not match A");
  if (pr.RB.cols() != n) out.push_back("RB column count does not match D");
  if (pr.LB.cols() != pr.RB.rows())
    out.push_back("LB/RB inner dimension mismatch");
  if (pr.LB.cols() < 1) out.push_back("B factor rank p must be at least 1");
  if (pr.LC.rows() != n) out.push_back("LC row count does not match D");
  if (pr.RC.cols() != m) out.push_back("RC column count does not match A");
  if (pr.LC.cols() != pr.RC.rows())
    out.push_back("LC/RC inner dimension mismatch");
  if (pr.LC.cols() < 1) out.push_back("C factor rank q must be at least 1");

  const Index q = pr.LC.cols();
  const bool has_phi = pr.LPhi.size() > 0 || pr.RPhi.size() > 0;
  if (pr.has_offsets()) {
    if (pr.LPhi.size() == 0) out.push_back("strengthened structure requires LPhi");
    if (pr.RPhi.size() == 0) out.push_back("strengthened structure requires RPhi");
    if (pr.LPhi.size() > 0 && (pr.LPhi.rows() != m || pr.LPhi.cols() != q))
      out.push_back("LPhi must be m x q");
    if (pr.RPhi.size() > 0 && (pr.RPhi.rows() != q || pr.RPhi.cols() != n))
      out.push_back("RPhi must be q x n");
  } else if (has_phi) {
    out.push_back("LPhi/RPhi present but kind carries no offsets");
  }

  if (pr.kind == ProblemKind::weak) {
    if (pr.LA.size() == 0) out.push_back("weak structure requires LA");
    if (pr.RA.size() == 0) out.push_back("weak structure requires RA");
    if (pr.LD.size() == 0) out.push_back("weak structure requires LD");
    if (pr.RD.size() == 0) out.push_back("weak structure requires RD");
    const Index w = pr.LA.cols();
    // The stacked factors [LC LD] diag(I,0) [RC; RA] are conformable only
    // with one shared extra rank on both sides.
    if (pr.RA.size() > 0 && (pr.RA.rows() != w || pr.RA.cols() != m))
      out.push_back("RA must be w x m with w matching LA");
    if (pr.LA.size() > 0 && pr.LA.rows() != m) out.push_back("LA must be m x w");
    if (pr.LD.size() > 0 && (pr.LD.rows() != n || pr.LD.cols() != w))
      out.push_back("LD must be n x w with w matching LA");
    if (pr.RD.size() > 0 && (pr.RD.rows() != w || pr.RD.cols() != n))
      out.push_back("RD must be w x n with w matching LA");
  } else if (pr.LA.size() > 0 || pr.RA.size() > 0 || pr.LD.size() > 0 ||
             pr.RD.size() > 0) {
    out.push_back("LA/RA/LD/RD present but kind is not weak");
  }

  if (pr.kind == ProblemKind::care) {
    if (m != n) out.push_back("care problems require m == n");
    if (!SquareOperator::transpose_pair(pr.A, pr.D)) {
      bool equal = false;
      if (m * n <= kDenseGuard)
        equal = pr.A.to_dense().isApprox(pr.D.to_dense().transpose(), 0.0);
      if (!equal) out.push_back("care problems require A == D^T entrywise");
    }
  }

  for (const auto* mass : {&pr.M, &pr.N}) {
    const char* name = (mass == &pr.M) ? "M" : "N";
    if (mass->empty()) continue;
    const Index dim = (mass == &pr.M) ? m : n;
    if (mass->rows() != dim) {
      out.push_back(std::string(name) + " has the wrong dimension");
      continue;
    }
    try {
      factor_shifted(*mass, {}, Complex(0.0, 0.0),
                     mass == &pr.M ? Side::A_side : Side::D_side);
    } catch (const SingularShift&) {
      out.push_back(std::string(name) + " is singular");
    } catch (const IllConditionedShift&) {
      out.push_back(std::string(name) + " is too ill-conditioned to certify");
    }
  }
  return out;
}

NareProblem from_care(const SquareOperator& Acare, const Matrix& Bcare,
                      const Matrix& Ccare,
                      const std::optional<SquareOperator>& Ecare) {
  const Index mc = Acare.rows();
  if (Bcare.rows() != mc)
    throw DimensionMismatch("from_care: B row count does not match A");
  if (Ccare.cols() != mc)
    throw DimensionMismatch("from_care: C column count does not match A");
  if (Ecare && Ecare->rows() != mc)
    throw DimensionMismatch("from_care: E dimension does not match A");

  NareProblem pr;
  pr.kind = ProblemKind::care;
  pr.D = Acare;
  pr.A = SquareOperator::TransposeOf(Acare);
  pr.LC = Bcare;
  pr.RC = Bcare.transpose();
  pr.RB = Ccare;
  pr.LB = -Ccare.transpose();
  if (Ecare) {
    pr.N = *Ecare;
    pr.M = SquareOperator::TransposeOf(*Ecare);
  }
  return pr;
}

std::pair<Matrix, double> residual_dense(const NareProblem& pr,
                                         const Eigen::Ref<const Matrix>& X) {
  if (X.rows() != pr.m() || X.cols() != pr.n())
    throw DimensionMismatch("residual_dense: X has the wrong shape");

  const Matrix xlc = X * pr.LC;
  Matrix quad = xlc * (pr.RC * X);        // X C X
  Matrix xd = pr.D.apply_right(X);        // X D_true
  if (pr.RPhi.size() > 0) xd -= xlc * pr.RPhi;
  if (pr.LD.size() > 0) xd -= (X * pr.LD) * pr.RD;
  Matrix ax = pr.A.apply(X);              // A_true X
  if (pr.LPhi.size() > 0) ax -= pr.LPhi * (pr.RC * X);
  if (pr.LA.size() > 0) ax -= pr.LA * (pr.RA * X);

  Matrix r;
  if (pr.has_mass()) {
    // M X C X N - M X D - A X N + B
    Matrix mq = pr.M.empty() ? quad : pr.M.apply(quad);
    r = pr.N.empty() ? mq : pr.N.apply_right(mq);
    r -= pr.M.empty() ? xd : pr.M.apply(xd);
    r -= pr.N.empty() ? ax : pr.N.apply_right(ax);
  } else {
    r = quad - xd - ax;
  }
  r += pr.LB * pr.RB;
  return {r, r.norm()};
}

Matrix hamiltonian(const NareProblem& pr, const std::optional<Matrix>& Xshift) {
  const Index m = pr.m(), n = pr.n();
  check_dense_guard(n + m, n + m, "hamiltonian");
  const auto red = pr.reduced_dense();
  const Matrix C = red.LC * red.RC;
  Matrix H(n + m, n + m);
  if (!Xshift) {
    H.topLeftCorner(n, n) = red.D;
    H.topRightCorner(n, m) = -C;
    H.bottomLeftCorner(m, n) = red.LB * red.RB;
    H.bottomRightCorner(m, m) = -red.A;
    return H;
  }
  const Matrix& X = *Xshift;
  if (X.rows() != m || X.cols() != n)
    throw DimensionMismatch("hamiltonian: Xshift has the wrong shape");
  const Matrix resid =
      (X * red.LC) * (red.RC * X) - X * red.D - red.A * X + red.LB * red.RB;
  H.topLeftCorner(n, n) = red.D - C * X;
  H.topRightCorner(n, m) = -C;
  H.bottomLeftCorner(m, n) = resid;
  H.bottomRightCorner(m, m) = -(red.A - X * C);
  return H;
}

SolutionClass classify_solution(const NareProblem& pr,
                                const Eigen::Ref<const Matrix>& X,
                                double band) {
  const auto red = pr.reduced_dense();
  const Matrix K = red.D - (red.LC * (red.RC * X));
  Eigen::EigenSolver<Matrix> es(K, /*computeEigenvectors=*/false);
  const double max_re = es.eigenvalues().real().maxCoeff();
  const double thr = band * (1.0 + K.norm());
  if (max_re < -thr) return SolutionClass::stabilizing;
  if (max_re > thr) return SolutionClass::anti_stabilizing;
  return SolutionClass::unknown;
}

}  // namespace nare
