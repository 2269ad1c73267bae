#include "nare/dense_oracle.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace nare::oracle {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

/// PartialPivLU plus an explicit near-singularity verdict on the U diagonal.
struct ComplexLu {
  Eigen::PartialPivLU<ComplexMatrix> lu;
  bool singular = false;

  explicit ComplexLu(const ComplexMatrix& k) : lu(k) {
    const auto d = lu.matrixLU().diagonal().cwiseAbs().eval();
    const double mx = d.maxCoeff();
    const double mn = d.minCoeff();
    singular = (mn == 0.0) || !std::isfinite(mx) ||
               mn <= kEps * mx * double(k.rows());
  }
};

void require_nonsingular(const ComplexLu& f, const char* name) {
  if (f.singular) throw AssumptionViolated(name);
}

/// Mass-reduced coefficients cast to complex.
struct DenseCoeffs {
  ComplexMatrix A, D, LB, RB, LC, RC, B, C;
  Index m, n, p, q;
};

DenseCoeffs dense_coeffs(const NareProblem& pr) {
  const auto red = pr.reduced_dense();
  DenseCoeffs dc;
  dc.A = red.A.cast<Complex>();
  dc.D = red.D.cast<Complex>();
  dc.LB = red.LB.cast<Complex>();
  dc.RB = red.RB.cast<Complex>();
  dc.LC = red.LC.cast<Complex>();
  dc.RC = red.RC.cast<Complex>();
  dc.B = dc.LB * dc.RB;
  dc.C = dc.LC * dc.RC;
  dc.m = dc.A.rows();
  dc.n = dc.D.rows();
  dc.p = dc.LB.cols();
  dc.q = dc.LC.cols();
  return dc;
}

ComplexMatrix shifted(const ComplexMatrix& base, Complex tau) {
  ComplexMatrix k = base;
  k.diagonal().array() += tau;
  return k;
}

double one_norm(const ComplexMatrix& k) {
  return k.cwiseAbs().colwise().sum().maxCoeff();
}

/// Shift-admissibility check for one pair, with the oracle's factorizations
/// returned for reuse.
struct ShiftContext {
  Complex alpha, beta, sum;
  ComplexLu luA;  // A + beta I
  ComplexLu luD;  // D + alpha I

  ShiftContext(const DenseCoeffs& dc, const ShiftPair& s)
      : alpha(s.alpha),
        beta(s.beta),
        sum(s.alpha + s.beta),
        luA(shifted(dc.A, s.beta)),
        luD(shifted(dc.D, s.alpha)) {
    require_nonsingular(luD, "D_alpha");
    require_nonsingular(luA, "A_beta");
    const ComplexMatrix BDC = dc.B * luD.lu.solve(dc.C);
    require_nonsingular(ComplexLu(shifted(dc.A, beta) - BDC),
                        "A_beta - B D_alpha^{-1} C");
    require_nonsingular(ComplexLu(shifted(dc.A, -alpha) - BDC),
                        "A_{-alpha} - B D_alpha^{-1} C");
    require_nonsingular(
        ComplexLu(shifted(dc.D, -beta) - dc.C * luA.lu.solve(dc.B)),
        "D_{-beta} - C A_beta^{-1} B");
  }
};

Complex omega_entry(const std::vector<ShiftPair>& shifts, int t, int k) {
  return shifts[t - 1 - k].alpha + shifts[t - 1 - k].beta;
}

struct ToeplitzWork {
  DenseCoeffs dc;
  std::vector<ComplexLu> luA;  // luA[i] factors A + beta_i I
  std::vector<ComplexLu> luD;  // luD[i] factors D + alpha_i I
  ToeplitzFactors tf;
};

ToeplitzWork build_toeplitz(const NareProblem& problem,
                            const std::vector<ShiftPair>& shifts, int t) {
  if (int(shifts.size()) < t)
    throw NareError("toeplitz_factors: shift list shorter than t");
  ToeplitzWork w{dense_coeffs(problem), {}, {}, {}};
  const auto& dc = w.dc;
  for (int i = 0; i < t; ++i) {
    ShiftContext ctx(dc, shifts[i]);  // validates admissibility of shift i
    w.luA.push_back(ctx.luA);
    w.luD.push_back(ctx.luD);
  }

  ToeplitzFactors& tf = w.tf;
  tf.t = t;
  tf.shifts.assign(shifts.begin(), shifts.begin() + t);
  tf.omega = omega_diagonal(shifts, t);
  tf.jsigns = alternating_signs(t);
  tf.Pab = p_matrix(tf.shifts, t);
  tf.Pba = p_matrix(swapped_shifts(tf.shifts), t);
  if (t == 0) return w;

  const Index m = dc.m, n = dc.n, p = dc.p, q = dc.q;

  // U^A: W_0 = (A+b_{t-1})^{-1} L^B, W_j = (A+b_{t-1-j})^{-1}(a_{t-j}-A)W_{j-1}
  tf.UA.resize(m, t * p);
  ComplexMatrix wa = w.luA[t - 1].lu.solve(dc.LB);
  tf.UA.leftCols(p) = wa;
  for (int j = 1; j < t; ++j) {
    const Complex a = shifts[t - j].alpha;
    wa = w.luA[t - 1 - j].lu.solve((a * wa - dc.A * wa).eval());
    tf.UA.middleCols(j * p, p) = wa;
  }

  // V^D: Z_0 = R^B (D+a_{t-1})^{-1}, Z_j = Z_{j-1}(b_{t-j}-D)(D+a_{t-1-j})^{-1},
  // row block k scaled by omega_k
  tf.VD.resize(t * p, n);
  ComplexMatrix zd =
      w.luD[t - 1].lu.transpose().solve(dc.RB.transpose()).transpose();
  tf.VD.topRows(p) = tf.omega(0) * zd;
  for (int j = 1; j < t; ++j) {
    const Complex b = shifts[t - j].beta;
    ComplexMatrix rhs = (b * zd - zd * dc.D).transpose();
    zd = w.luD[t - 1 - j].lu.transpose().solve(rhs).transpose();
    tf.VD.middleRows(j * p, p) = tf.omega(j) * zd;
  }

  // U^D: G_0 = (D+a_0)^{-1} L^C, G_i = (D+a_i)^{-1}(b_{i-1}-D)G_{i-1},
  // stored right-to-left
  tf.UD.resize(n, t * q);
  ComplexMatrix gd = w.luD[0].lu.solve(dc.LC);
  tf.UD.rightCols(q) = gd;
  for (int i = 1; i < t; ++i) {
    const Complex b = shifts[i - 1].beta;
    gd = w.luD[i].lu.solve((b * gd - dc.D * gd).eval());
    tf.UD.middleCols((t - 1 - i) * q, q) = gd;
  }

  // V^A: H_0 = R^C (A+b_0)^{-1}, H_i = H_{i-1}(a_{i-1}-A)(A+b_i)^{-1},
  // row block k is omega_k H_{t-1-k}
  tf.VA.resize(t * q, m);
  ComplexMatrix ha =
      w.luA[0].lu.transpose().solve(dc.RC.transpose()).transpose();
  tf.VA.bottomRows(q) = tf.omega(t - 1) * ha;
  for (int i = 1; i < t; ++i) {
    const Complex a = shifts[i - 1].alpha;
    ComplexMatrix rhs = (a * ha - ha * dc.A).transpose();
    ha = w.luA[i].lu.transpose().solve(rhs).transpose();
    tf.VA.middleRows((t - 1 - i) * q, q) = tf.omega(t - 1 - i) * ha;
  }

  // T^A = (I_t (x) R^C) [J (P^{b,a})^T J (x) I_m + I_t (x) A]^{-1} (I_t (x) L^B):
  // upper-triangular block back substitution, S_{jj} = b_{t-1-j},
  // S_{jk} = (-1)^{j+k} omega_j for k > j.
  tf.TA = ComplexMatrix::Zero(t * q, t * p);
  std::vector<ComplexMatrix> col(t);
  for (int c = 0; c < t; ++c) {
    for (int j = c; j >= 0; --j) {
      ComplexMatrix rhs =
          j == c ? ComplexMatrix(dc.LB) : ComplexMatrix::Zero(m, p);
      for (int i = j + 1; i <= c; ++i) {
        const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
        rhs -= sgn * tf.omega(j) * col[i];
      }
      col[j] = w.luA[t - 1 - j].lu.solve(rhs);
      tf.TA.block(j * q, c * p, q, p) = dc.RC * col[j];
    }
  }

  // T^D = (Omega (x) R^B) [J P^{a,b} J (x) I_n + I_t (x) D]^{-1} (Omega^{-1} (x) L^C):
  // lower-triangular forward substitution, G_{jj} = a_{t-1-j},
  // G_{jk} = (-1)^{j+k} omega_k for j > k.
  tf.TD = ComplexMatrix::Zero(t * p, t * q);
  for (int c = 0; c < t; ++c) {
    for (int j = c; j < t; ++j) {
      ComplexMatrix rhs = j == c ? ComplexMatrix(dc.LC / tf.omega(c))
                                 : ComplexMatrix::Zero(n, q);
      for (int i = c; i < j; ++i) {
        const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
        rhs -= sgn * tf.omega(i) * col[i];
      }
      col[j] = w.luD[t - 1 - j].lu.solve(rhs);
      tf.TD.block(j * p, c * q, p, q) = tf.omega(j) * (dc.RB * col[j]);
    }
  }

  const ComplexMatrix mid =
      ComplexMatrix::Identity(t * p, t * p) - tf.TD * tf.TA;
  Eigen::PartialPivLU<ComplexMatrix> lu(mid);
  tf.mid_cond = one_norm(mid) * one_norm(lu.inverse());
  return w;
}

ComplexMatrix kron_omega_j_ones(const ToeplitzFactors& tf, Index p) {
  // (Omega_t J_t 1_t (x) I_p), a tp x p stack of signed scaled identities
  ComplexMatrix k = ComplexMatrix::Zero(tf.t * p, p);
  for (int i = 0; i < tf.t; ++i)
    k.middleRows(i * p, p) =
        (tf.omega(i) * tf.jsigns(i)) * ComplexMatrix::Identity(p, p);
  return k;
}

ComplexMatrix kron_ones_j(const ToeplitzFactors& tf, Index p) {
  // (1_t^T J_t (x) I_p), p x tp
  ComplexMatrix k = ComplexMatrix::Zero(p, tf.t * p);
  for (int i = 0; i < tf.t; ++i)
    k.middleCols(i * p, p) = tf.jsigns(i) * ComplexMatrix::Identity(p, p);
  return k;
}

/// Bubble eigenvalues selected by `take` to the leading positions of a
/// complex Schur form, updating Q alongside.
template <typename Pred>
int reorder_schur(ComplexMatrix& T, ComplexMatrix& Q, Pred take) {
  const Index nn = T.rows();
  auto swap_adjacent = [&](Index i) {
    const Complex a = T(i, i), b = T(i, i + 1), c = T(i + 1, i + 1);
    Eigen::Matrix2cd U;
    const double scale = std::abs(a) + std::abs(b) + std::abs(c);
    const Complex v1 = b, v2 = c - a;
    const double nv = std::sqrt(std::norm(v1) + std::norm(v2));
    if (nv <= kEps * scale) {
      U << 0, 1, 1, 0;  // b ~ 0: plain exchange
    } else if (std::abs(v2) <= kEps * scale) {
      return;  // equal eigenvalues in one block: nothing to order
    } else {
      const Complex u1 = v1 / nv, u2 = v2 / nv;
      U << u1, -std::conj(u2), u2, std::conj(u1);
    }
    T.middleRows(i, 2) = (U.adjoint() * T.middleRows(i, 2)).eval();
    T.middleCols(i, 2) = (T.middleCols(i, 2) * U).eval();
    T(i + 1, i) = Complex(0, 0);
    Q.middleCols(i, 2) = (Q.middleCols(i, 2) * U).eval();
  };

  int target = 0;
  for (Index i = 0; i < nn; ++i) {
    if (!take(T(i, i))) continue;
    for (Index j = i; j > target; --j) swap_adjacent(j - 1);
    ++target;
  }
  return target;
}

}  // namespace

ComplexMatrix cayley(const Eigen::Ref<const ComplexMatrix>& M, Complex alpha,
                     Complex beta) {
  ComplexMatrix num = -M;
  num.diagonal().array() += beta;
  ComplexMatrix den = M;
  den.diagonal().array() += alpha;
  ComplexLu lu(den);
  if (lu.singular) throw SingularShift("alpha I + M is singular");
  return lu.lu.solve(num);
}

Matrix cayley(const Eigen::Ref<const Matrix>& M, double alpha, double beta) {
  return cayley(ComplexMatrix(M.cast<Complex>()), Complex(alpha),
                Complex(beta))
      .real();
}

Complex rational_value(const std::vector<ShiftPair>& shifts, int i, int j,
                       Complex lambda, RationalVariant variant) {
  if (j < 0 || j > i || i > int(shifts.size()))
    throw NareError("rational_value: invalid (i, j) for the shift list");
  Complex prod(1.0, 0.0);
  for (int l = 1; l <= j; ++l) {
    const auto& s = shifts[i - l];
    const Complex den = lambda + s.alpha;
    if (den == Complex(0.0, 0.0)) throw PoleHit("lambda + alpha_l vanishes");
    prod *= (s.beta - lambda) / den;
  }
  if (variant == RationalVariant::over) {
    if (i - j - 1 < 0)
      throw NareError("rational_value: over-variant needs i - j - 1 >= 0");
    const Complex den = lambda + shifts[i - j - 1].alpha;
    if (den == Complex(0.0, 0.0)) throw PoleHit("lambda + alpha_{i-j-1} vanishes");
    prod /= den;
  } else if (variant == RationalVariant::under) {
    if (i >= int(shifts.size()))
      throw NareError("rational_value: under-variant needs alpha_i");
    const Complex den = lambda + shifts[i].alpha;
    if (den == Complex(0.0, 0.0)) throw PoleHit("lambda + alpha_i vanishes");
    prod /= den;
  }
  return prod;
}

std::vector<ShiftPair> swapped_shifts(const std::vector<ShiftPair>& shifts) {
  std::vector<ShiftPair> out;
  out.reserve(shifts.size());
  for (const auto& s : shifts) {
    ShiftPair sw = s;
    std::swap(sw.alpha, sw.beta);
    out.push_back(sw);
  }
  return out;
}

ComplexVector omega_diagonal(const std::vector<ShiftPair>& shifts, int t) {
  ComplexVector w(t);
  for (int k = 0; k < t; ++k) w(k) = omega_entry(shifts, t, k);
  return w;
}

Vector alternating_signs(int t) {
  Vector j(t);
  for (int k = 0; k < t; ++k) j(k) = (k % 2 == 0) ? 1.0 : -1.0;
  return j;
}

ComplexMatrix p_matrix(const std::vector<ShiftPair>& shifts, int t) {
  ComplexMatrix p = ComplexMatrix::Zero(t, t);
  for (int k = 0; k < t; ++k) {
    p(k, k) = shifts[t - 1 - k].alpha;
    for (int j = k + 1; j < t; ++j) p(j, k) = omega_entry(shifts, t, k);
  }
  return p;
}

ComplexMatrix t_matrix_scalar(const std::vector<ShiftPair>& shifts, int t,
                              Complex lambda) {
  ComplexMatrix tm = ComplexMatrix::Zero(t, t);
  for (int k = 0; k < t; ++k) {
    tm(k, k) = rational_value(shifts, t - k, 0, lambda, RationalVariant::over) /
               omega_entry(shifts, t, k);
    for (int r = k + 1; r < t; ++r) {
      const Complex den = shifts[t - 1 - k].alpha + lambda;
      if (den == Complex(0.0, 0.0)) throw PoleHit("alpha + lambda vanishes");
      tm(r, k) = rational_value(shifts, t - 1 - k, r - 1 - k, lambda,
                                RationalVariant::plain) /
                 den;
    }
  }
  return tm;
}

ComplexVector v_vector_scalar(const std::vector<ShiftPair>& shifts, int t,
                              Complex lambda) {
  ComplexVector v(t);
  for (int j = 0; j < t; ++j)
    v(j) = rational_value(shifts, t, j, lambda, RationalVariant::over);
  return v;
}

CayleyCoefficients cayley_coefficients(const NareProblem& problem,
                                       const ShiftPair& shift) {
  const DenseCoeffs dc = dense_coeffs(problem);
  ShiftContext ctx(dc, shift);
  const Complex a = ctx.alpha, b = ctx.beta, sum = ctx.sum;

  CayleyCoefficients c;
  c.shift = shift;
  const ComplexMatrix BDC = dc.B * ctx.luD.lu.solve(dc.C);
  const ComplexMatrix CAB = dc.C * ctx.luA.lu.solve(dc.B);
  ComplexLu luSA(shifted(dc.A, b) - BDC);
  ComplexLu luSD(shifted(dc.D, a) - CAB);
  // ShiftContext already vetted these, but they are factored again here for
  // the solves.
  require_nonsingular(luSA, "A_beta - B D_alpha^{-1} C");
  require_nonsingular(luSD, "D_alpha - C A_beta^{-1} B");

  c.F0 = -luSA.lu.solve(shifted(dc.A, -a) - BDC);
  c.E0 = -luSD.lu.solve(shifted(dc.D, -b) - CAB);
  const ComplexMatrix b_da =
      ctx.luD.lu.transpose().solve(dc.B.transpose()).transpose();
  const ComplexMatrix c_ab =
      ctx.luA.lu.transpose().solve(dc.C.transpose()).transpose();
  c.H0 = sum * luSA.lu.solve(b_da);
  c.G0 = sum * luSD.lu.solve(c_ab);

  c.Atilde = -ctx.luA.lu.solve(shifted(dc.A, -a));
  c.Dtilde = -ctx.luD.lu.solve(shifted(dc.D, -b));
  c.Lb = ctx.luA.lu.solve(dc.LB);
  c.Rb = sum * ctx.luD.lu.transpose().solve(dc.RB.transpose()).transpose();
  c.Lc = ctx.luD.lu.solve(dc.LC);
  c.Rc = sum * ctx.luA.lu.transpose().solve(dc.RC.transpose()).transpose();
  c.Ya = dc.RC * ctx.luA.lu.solve(dc.LB);
  c.Yd = dc.RB * ctx.luD.lu.solve(dc.LC);
  return c;
}

std::vector<ComplexMatrix> fixed_point_run(
    const NareProblem& problem, const std::vector<ShiftPair>& shifts, int t,
    const std::optional<FactorPair>& x0_factors) {
  if (int(shifts.size()) < t)
    throw NareError("fixed_point_run: shift list shorter than t");
  const Index m = problem.m(), n = problem.n();
  ComplexMatrix x = ComplexMatrix::Zero(m, n);
  if (x0_factors)
    x = (x0_factors->first * x0_factors->second).cast<Complex>();

  std::vector<ComplexMatrix> out;
  out.reserve(t);
  for (int k = 0; k < t; ++k) {
    const auto c = cayley_coefficients(problem, shifts[k]);
    ComplexMatrix mid = ComplexMatrix::Identity(n, n) - c.G0 * x;
    ComplexLu lu(mid);
    if (lu.singular) throw IterationBreakdown(k + 1);
    x = c.H0 + c.F0 * x * lu.lu.solve(c.E0);
    out.push_back(x);
  }
  return out;
}

ToeplitzFactors toeplitz_factors(const NareProblem& problem,
                                 const std::vector<ShiftPair>& shifts, int t) {
  return build_toeplitz(problem, shifts, t).tf;
}

ComplexMatrix closed_form_solution(const NareProblem& problem,
                                   const std::vector<ShiftPair>& shifts, int t,
                                   const std::optional<FactorPair>& x0_factors) {
  const Index m = problem.m(), n = problem.n();
  if (t == 0) {
    if (x0_factors)
      return (x0_factors->first * x0_factors->second).cast<Complex>();
    return ComplexMatrix::Zero(m, n);
  }
  ToeplitzWork w = build_toeplitz(problem, shifts, t);
  const ToeplitzFactors& tf = w.tf;
  const Index tp = tf.TD.rows();

  if (!x0_factors) {
    ComplexMatrix mid = ComplexMatrix::Identity(tp, tp) - tf.TD * tf.TA;
    ComplexLu lu(mid);
    if (lu.singular) throw IterationBreakdown(t);
    return tf.UA * lu.lu.solve(tf.VD);
  }

  const ComplexMatrix ga = x0_factors->first.cast<Complex>();
  const ComplexMatrix gd = x0_factors->second.cast<Complex>();
  const Index r = ga.cols();

  // C^{b,a}_{t,t}(A) Gamma_A and Gamma_D C^{a,b}_{t,t}(D); the scalar factors
  // of one matrix argument commute, so they are applied in index order.
  ComplexMatrix ca = ga;
  ComplexMatrix cd = gd;
  for (int i = 0; i < t; ++i) {
    ca = w.luA[i].lu.solve((shifts[i].alpha * ca - w.dc.A * ca).eval());
    ComplexMatrix rhs = (shifts[i].beta * cd - cd * w.dc.D).transpose();
    cd = w.luD[i].lu.transpose().solve(rhs).transpose();
  }

  ComplexMatrix big_u(m, tp + r);
  big_u << tf.UA, ca;
  ComplexMatrix big_v(tp + r, n);
  big_v << tf.VD, cd;
  ComplexMatrix m21(tp + r, tf.TD.cols());
  m21 << tf.TD, gd.cast<Complex>().eval() * tf.UD;
  ComplexMatrix m12(tf.TA.rows(), tp + r);
  m12 << tf.TA, tf.VA * ga;
  ComplexMatrix mid = ComplexMatrix::Identity(tp + r, tp + r) - m21 * m12;
  ComplexLu lu(mid);
  if (lu.singular) throw IterationBreakdown(t);
  return big_u * lu.lu.solve(big_v);
}

std::pair<ComplexMatrix, ComplexMatrix> residual_factors_closed(
    const NareProblem& problem, const std::vector<ShiftPair>& shifts, int t) {
  const DenseCoeffs dc = dense_coeffs(problem);
  if (t == 0) return {dc.LB, dc.RB};

  ToeplitzWork w = build_toeplitz(problem, shifts, t);
  const ToeplitzFactors& tf = w.tf;
  const Index tp = tf.TD.rows(), p = dc.p;
  ComplexMatrix mid = ComplexMatrix::Identity(tp, tp) - tf.TD * tf.TA;
  ComplexLu lu(mid);
  if (lu.singular) throw IterationBreakdown(t);

  ComplexMatrix lbt = dc.LB - tf.UA * lu.lu.solve(kron_omega_j_ones(tf, p));
  ComplexMatrix rbt = dc.RB - kron_ones_j(tf, p) * lu.lu.solve(tf.VD);
  return {lbt, rbt};
}

StabilizingPair schur_stabilizing_solution(
    const NareProblem& problem, const std::optional<ShiftPair>& reference_shift,
    double axis_band) {
  const Index m = problem.m(), n = problem.n();
  const auto red = problem.reduced_dense();
  const Matrix C = red.LC * red.RC;
  Matrix h(n + m, n + m);
  h.topLeftCorner(n, n) = red.D;
  h.topRightCorner(n, m) = -C;
  h.bottomLeftCorner(m, n) = red.LB * red.RB;
  h.bottomRightCorner(m, m) = -red.A;

  const double band = axis_band * std::max(1.0, h.norm());
  Eigen::ComplexSchur<ComplexMatrix> schur(h.cast<Complex>(), true);
  if (schur.info() != Eigen::Success)
    throw NareError("complex Schur decomposition failed");

  Index stable = 0, anti = 0;
  for (Index i = 0; i < n + m; ++i) {
    const double re = schur.matrixT()(i, i).real();
    if (re < -band)
      ++stable;
    else if (re > band)
      ++anti;
    else
      throw NoSplitting("eigenvalue within the axis tolerance band");
  }
  if (stable != n || anti != m)
    throw NoSplitting("eigenvalues do not split as n stable / m anti-stable");

  auto subspace = [&](bool want_stable, Index count) {
    ComplexMatrix T = schur.matrixT();
    ComplexMatrix Q = schur.matrixU();
    reorder_schur(T, Q, [&](Complex lam) {
      return want_stable ? lam.real() < -band : lam.real() > band;
    });
    return ComplexMatrix(Q.leftCols(count));
  };

  StabilizingPair out;
  {
    const ComplexMatrix z = subspace(true, n);
    Eigen::FullPivLU<ComplexMatrix> lu(z.topRows(n));
    if (!lu.isInvertible())
      throw SingularBasis("leading block of the stable basis is singular");
    const ComplexMatrix x =
        lu.transpose().solve(z.bottomRows(m).transpose()).transpose();
    out.X = x.real();
  }
  {
    const ComplexMatrix zd = subspace(false, m);
    Eigen::FullPivLU<ComplexMatrix> lu(zd.bottomRows(m));
    if (!lu.isInvertible())
      throw SingularBasis("trailing block of the anti-stable basis is singular");
    // Y = W1 W2^{-1}: solve W2^T Y^T = W1^T
    out.Y = lu.transpose().solve(zd.topRows(n).transpose()).transpose().real();
  }
  out.classification = classify_solution(problem, out.X, axis_band);

  if (reference_shift) {
    const Complex a = reference_shift->alpha, b = reference_shift->beta;
    const ComplexMatrix rc =
        -cayley(ComplexMatrix((red.D - C * out.X).cast<Complex>()), a, b);
    const ComplexMatrix sc = -cayley(
        ComplexMatrix((red.A - (red.LB * red.RB) * out.Y).cast<Complex>()), b,
        a);
    Eigen::ComplexEigenSolver<ComplexMatrix> er(rc, false), es(sc, false);
    out.spec_radius_product = er.eigenvalues().cwiseAbs().maxCoeff() *
                              es.eigenvalues().cwiseAbs().maxCoeff();
    out.R = rc.real();
    out.S = sc.real();
  }
  return out;
}

}  // namespace nare::oracle
