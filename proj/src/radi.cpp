#include "nare/radi.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "nare/dense_oracle.hpp"

namespace nare {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double gram_norm(const Matrix& l, const Matrix& r) {
  const Matrix gl = l.transpose() * l;
  const Matrix gr = r * r.transpose();
  const double tr = (gl.array() * gr.transpose().array()).sum();
  return std::sqrt(std::max(0.0, tr));
}

/// L_U R_U split of Upsilon with growth monitoring. lxhat/rxhat carry the
/// two halves of Upsilon^{-1}; updl/updr are the full solves used by the
/// residual-factor updates.
struct UpsilonSplit {
  Matrix lxhat, rxhat, updl, updr;
};

UpsilonSplit split_upsilon(const Matrix& ups, const Matrix& ahat,
                           const Matrix& bhat) {
  Eigen::PartialPivLU<Matrix> lu(ups);
  const auto packed = lu.matrixLU();
  const auto diag = packed.diagonal().cwiseAbs().eval();
  const double mx = packed.cwiseAbs().maxCoeff();
  const double scale = std::max(ups.cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min());
  if (diag.minCoeff() == 0.0 || !std::isfinite(mx))
    throw SingularUpsilon("Upsilon factorization has a zero pivot");
  if (mx / scale > 1e14)
    throw SingularUpsilon("Upsilon factorization growth exceeds 1e14");

  UpsilonSplit out;
  const auto upper = packed.triangularView<Eigen::Upper>();
  const auto lower = packed.triangularView<Eigen::UnitLower>();
  out.lxhat = upper.transpose().solve(ahat.transpose()).transpose();
  out.rxhat = lower.solve((lu.permutationP() * bhat).eval());
  out.updl = lu.transpose().solve(ahat.transpose()).transpose();
  out.updr = lu.solve(bhat);
  return out;
}

Matrix solve_right(const Matrix& x, const Matrix& mid, const char* what) {
  // x mid^{-1} with a pivot check; the SMW midmatrix going singular means the
  // implicitly updated coefficient itself is singular at this shift.
  Eigen::PartialPivLU<Matrix> lu(mid);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs().eval();
  if (diag.minCoeff() == 0.0 || !std::isfinite(diag.maxCoeff()))
    throw SingularUpsilon(what);
  return lu.transpose().solve(x.transpose()).transpose();
}

Matrix solve_left(const Matrix& mid, const Matrix& x, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(mid);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs().eval();
  if (diag.minCoeff() == 0.0 || !std::isfinite(diag.maxCoeff()))
    throw SingularUpsilon(what);
  return lu.solve(x);
}

void append_blocks(const NareProblem& problem, RadiState& state,
                   const Matrix& lxhat, const Matrix& rxhat) {
  const Index k = state.LX.cols(), add = lxhat.cols();
  state.LX.conservativeResize(problem.m(), k + add);
  state.LX.rightCols(add) = lxhat;
  state.RX.conservativeResize(k + add, problem.n());
  state.RX.bottomRows(add) = rxhat;
  state.window_left.push_back(lxhat);
  state.window_right.push_back(rxhat);
  // only a bounded window feeds the shift projections
  constexpr std::size_t kWindowKeep = 16;
  if (state.window_left.size() > kWindowKeep) {
    state.window_left.erase(state.window_left.begin());
    state.window_right.erase(state.window_right.begin());
  }
}

void apply_factor_updates(const NareProblem& problem, RadiState& state,
                          const Matrix& updl, const Matrix& updr,
                          const Matrix& yd_cols, const Matrix& ya_rows) {
  const Matrix mul = problem.M.empty() ? updl : problem.M.apply(updl);
  const Matrix urn = problem.N.empty() ? updr : problem.N.apply_right(updr);
  state.LBk -= mul.leftCols(state.LBk.cols());
  state.LPhik += mul * yd_cols;
  state.RBk -= urn.topRows(state.RBk.rows());
  state.RPhik += ya_rows * urn;
}

}  // namespace

RadiState initialize(const NareProblem& problem) {
  RadiState st;
  const Index m = problem.m(), n = problem.n(), q = problem.q();
  st.LX = Matrix::Zero(m, 0);
  st.RX = Matrix::Zero(0, n);
  st.LBk = problem.LB;
  st.RBk = problem.RB;
  st.LPhik = problem.LPhi.size() > 0 ? problem.LPhi : Matrix::Zero(m, q);
  st.RPhik = problem.RPhi.size() > 0 ? problem.RPhi : Matrix::Zero(q, n);
  st.nu0 = gram_norm(st.LBk, st.RBk);
  return st;
}

double residual_norm(const RadiState& state) {
  if (state.nu0 == 0.0) return 0.0;
  return gram_norm(state.LBk, state.RBk) / state.nu0;
}

Matrix assemble_dense(const RadiState& state) {
  const Index m = state.LX.rows(), n = state.RX.cols();
  if (m * n > kDenseGuard)
    throw SizeGuardExceeded("assemble_dense exceeds the dense size guard");
  return state.LX * state.RX;
}

ProjectionInputs make_projection_inputs(const RadiState& state) {
  return ProjectionInputs{state.window_left, state.window_right, state.LBk,
                          state.RBk, state.LPhik, state.RPhik};
}

void step_real(const NareProblem& problem, RadiState& state,
               const ShiftPair& shift, ShiftedSolverService& service) {
  if (!shift.is_real) throw NareError("step_real given a nonreal shift");
  const Complex alpha = shift.alpha, beta = shift.beta;
  if (std::abs(alpha + beta) <= pair_tol(shift))
    throw SingularUpsilon("alpha + beta is numerically zero");
  if (state.LBk.cwiseAbs().maxCoeff() == 0.0 ||
      state.RBk.cwiseAbs().maxCoeff() == 0.0) {
    ++state.iter;  // zero residual stays zero
    return;
  }

  const Index p = state.LBk.cols(), q = problem.q();
  const SideHandle fa = service.factor(Side::A_side, beta);
  const SideHandle fd = service.factor(Side::D_side, alpha);

  Matrix rhs(problem.m(), p + q);
  rhs << state.LBk, state.LPhik;
  const Matrix lhat = service.solve_columns(fa, rhs);
  const Matrix lb_hat = lhat.leftCols(p);
  const Matrix lphi_hat = lhat.rightCols(q);

  const Matrix mid_a =
      Matrix::Identity(q, q) - problem.RC * lphi_hat;
  const Matrix ya =
      solve_left(mid_a, (problem.RC * lb_hat).eval(), "I - R^C L^Phi singular");

  Matrix lhs(p + q, problem.n());
  lhs << state.RBk, state.RPhik;
  const Matrix rhat = service.solve_rows(fd, lhs);
  const Matrix rb_hat = rhat.topRows(p);
  const Matrix rphi_hat = rhat.bottomRows(q);

  const Matrix mid_d = Matrix::Identity(q, q) - rphi_hat * problem.LC;
  const Matrix yd =
      solve_right((rb_hat * problem.LC).eval(), mid_d, "I - R^Phi L^C singular");

  const Matrix ups =
      (Matrix::Identity(p, p) - yd * ya) / (alpha.real() + beta.real());
  const Matrix ahat = lb_hat + lphi_hat * ya;
  const Matrix bhat = rb_hat + yd * rphi_hat;
  const UpsilonSplit sp = split_upsilon(ups, ahat, bhat);

  apply_factor_updates(problem, state, sp.updl, sp.updr, yd, ya);
  append_blocks(problem, state, sp.lxhat, sp.rxhat);
  ++state.iter;
}

void step_weak(const NareProblem& problem, RadiState& state,
               const ShiftPair& shift, ShiftedSolverService& service) {
  if (problem.kind != ProblemKind::weak)
    throw NareError("step_weak requires a weak-structure problem");
  if (!shift.is_real) throw NareError("step_weak handles real shifts only");
  const Complex alpha = shift.alpha, beta = shift.beta;
  if (std::abs(alpha + beta) <= pair_tol(shift))
    throw SingularUpsilon("alpha + beta is numerically zero");
  if (state.LBk.cwiseAbs().maxCoeff() == 0.0 ||
      state.RBk.cwiseAbs().maxCoeff() == 0.0) {
    ++state.iter;
    return;
  }

  const Index p = state.LBk.cols(), q = problem.q(), w = problem.w();
  const SideHandle fa = service.factor(Side::A_side, beta);
  const SideHandle fd = service.factor(Side::D_side, alpha);

  Matrix rhs(problem.m(), p + q + w);
  rhs << state.LBk, state.LPhik, problem.LA;
  const Matrix lhat = service.solve_columns(fa, rhs);
  const Matrix lb_hat = lhat.leftCols(p);
  const Matrix lpa_hat = lhat.rightCols(q + w);  // [L^Phi-hat, L^A-hat]

  Matrix rca(q + w, problem.m());
  rca << problem.RC, problem.RA;
  const Matrix mid_a = Matrix::Identity(q + w, q + w) - rca * lpa_hat;
  const Matrix ya =
      solve_left(mid_a, (rca * lb_hat).eval(), "widened SMW block singular");

  Matrix lhs(p + q + w, problem.n());
  lhs << state.RBk, state.RPhik, problem.RD;
  const Matrix rhat = service.solve_rows(fd, lhs);
  const Matrix rb_hat = rhat.topRows(p);
  const Matrix rpd_hat = rhat.bottomRows(q + w);  // [R^Phi-hat; R^D-hat]

  Matrix lcd(problem.n(), q + w);
  lcd << problem.LC, problem.LD;
  const Matrix mid_d = Matrix::Identity(q + w, q + w) - rpd_hat * lcd;
  const Matrix yd =
      solve_right((rb_hat * lcd).eval(), mid_d, "widened SMW block singular");

  // diag(I_q, 0) selector: only the C-aligned slices meet in Upsilon
  const Matrix ups = (Matrix::Identity(p, p) -
                      yd.leftCols(q) * ya.topRows(q)) /
                     (alpha.real() + beta.real());
  const Matrix ahat = lb_hat + lpa_hat * ya;
  const Matrix bhat = rb_hat + yd * rpd_hat;
  const UpsilonSplit sp = split_upsilon(ups, ahat, bhat);

  apply_factor_updates(problem, state, sp.updl, sp.updr, yd.leftCols(q),
                       ya.topRows(q));
  append_blocks(problem, state, sp.lxhat, sp.rxhat);
  ++state.iter;
}

void step_complex_pair(const NareProblem& problem, RadiState& state,
                       const ShiftPair& shift, ShiftedSolverService& service) {
  const Complex alpha = shift.alpha, beta = shift.beta;
  const double tol = shift_imag_tol(alpha, beta);
  if (std::abs(beta.imag()) <= tol || std::abs(alpha.imag()) <= tol)
    throw DegeneratePsi("double step needs nonreal alpha and beta");
  if (std::abs(alpha + beta) <= pair_tol(shift))
    throw SingularUpsilon("alpha + beta is numerically zero");
  const double ia = alpha.imag(), ib = beta.imag();
  const double n2 = std::norm(alpha + beta);
  const double den = n2 - 4.0 * ia * ib;
  if (std::abs(den) <= 1e-14 * (n2 + 4.0 * std::abs(ia * ib)))
    throw DegeneratePsi("|alpha+beta|^2 - 4 Im(alpha) Im(beta) vanishes");
  if (state.LBk.cwiseAbs().maxCoeff() == 0.0 ||
      state.RBk.cwiseAbs().maxCoeff() == 0.0) {
    state.iter += 2;
    return;
  }

  const Index m = problem.m(), n = problem.n();
  const Index p = state.LBk.cols(), q = problem.q();
  const SideHandle fa = service.factor(Side::A_side, beta);
  const SideHandle fd = service.factor(Side::D_side, alpha);

  Matrix rhs(m, p + q);
  rhs << state.LBk, state.LPhik;
  const Matrix lhat = service.solve_columns(fa, rhs);  // [Re; Im], 2m x (p+q)
  const Matrix lb_re = lhat.topRows(m).leftCols(p);
  const Matrix lb_im = lhat.bottomRows(m).leftCols(p);
  const Matrix lphi_re = lhat.topRows(m).rightCols(q);
  const Matrix lphi_im = lhat.bottomRows(m).rightCols(q);

  Matrix mid_a(2 * q, 2 * q);
  mid_a << Matrix::Identity(q, q) - problem.RC * lphi_re,
      problem.RC * lphi_im, -(problem.RC * lphi_im),
      Matrix::Identity(q, q) - problem.RC * lphi_re;
  Matrix rhs_ya(2 * q, p);
  rhs_ya << problem.RC * lb_re, problem.RC * lb_im;
  const Matrix ya2 = solve_left(mid_a, rhs_ya, "doubled SMW block singular");
  const Matrix ya_re = ya2.topRows(q);
  const Matrix ya_im = ya2.bottomRows(q);

  Matrix lhs(p + q, n);
  lhs << state.RBk, state.RPhik;
  const Matrix rhat = service.solve_rows(fd, lhs);  // [Re, Im], (p+q) x 2n
  const Matrix rb_re = rhat.topRows(p).leftCols(n);
  const Matrix rb_im = rhat.topRows(p).rightCols(n);
  const Matrix rphi_re = rhat.bottomRows(q).leftCols(n);
  const Matrix rphi_im = rhat.bottomRows(q).rightCols(n);

  Matrix mid_d(2 * q, 2 * q);
  mid_d << Matrix::Identity(q, q) - rphi_re * problem.LC,
      -(rphi_im * problem.LC), rphi_im * problem.LC,
      Matrix::Identity(q, q) - rphi_re * problem.LC;
  Matrix lhs_yd(p, 2 * q);
  lhs_yd << rb_re * problem.LC, rb_im * problem.LC;
  const Matrix yd2 = solve_right(lhs_yd, mid_d, "doubled SMW block singular");
  const Matrix yd_re = yd2.leftCols(q);
  const Matrix yd_im = yd2.rightCols(q);

  const Complex s = alpha + beta;
  Eigen::Matrix2d psi;
  psi << -2.0 * s.real() / n2 + s.real() / (ia * ib),
      2.0 * s.imag() / n2 - 1.0 / ia, 2.0 * s.imag() / n2 - 1.0 / ib,
      2.0 * s.real() / n2;
  psi *= ia * ib / den;

  auto kron2 = [](const Eigen::Matrix2d& k, Index sz) {
    Matrix out(2 * sz, 2 * sz);
    const Matrix eye = Matrix::Identity(sz, sz);
    out << k(0, 0) * eye, k(0, 1) * eye, k(1, 0) * eye, k(1, 1) * eye;
    return out;
  };

  Matrix yd_block(2 * p, 2 * q);
  yd_block << yd_re, -yd_im, yd_im, yd_re;
  Matrix ya_block(2 * q, 2 * p);
  ya_block << ya_re, ya_im, -ya_im, ya_re;

  const Matrix ups = kron2(psi, p) - yd_block * kron2(psi, q) * ya_block;
  Matrix ahat(m, 2 * p);
  ahat.leftCols(p) = lb_re;
  ahat.rightCols(p) = lb_im;
  Matrix lphi2(m, 2 * q);
  lphi2 << lphi_re, lphi_im;
  ahat += lphi2 * ya_block;

  Matrix bhat(2 * p, n);
  bhat.topRows(p) = rb_re;
  bhat.bottomRows(p) = rb_im;
  Matrix rphi2(2 * q, n);
  rphi2 << rphi_re, rphi_im;
  bhat += yd_block * rphi2;

  const UpsilonSplit sp = split_upsilon(ups, ahat, bhat);

  Matrix yd_cols(2 * p, q);
  yd_cols << yd_re, yd_im;
  Matrix ya_rows(q, 2 * p);
  ya_rows << ya_re, ya_im;
  apply_factor_updates(problem, state, sp.updl, sp.updr, yd_cols, ya_rows);
  append_blocks(problem, state, sp.lxhat, sp.rxhat);
  state.iter += 2;
}

void step_complex_dense_debug(const NareProblem& problem, RadiState& state,
                              const ShiftPair& shift) {
  const Index m = problem.m(), n = problem.n(), p = state.LBk.cols();
  if (m * n > kDenseGuard)
    throw SizeGuardExceeded("complex debug step needs dense scale");
  if (std::abs(shift.alpha + shift.beta) <= pair_tol(shift))
    throw SingularUpsilon("alpha + beta is numerically zero");
  if (state.LBk.cwiseAbs().maxCoeff() == 0.0 ||
      state.RBk.cwiseAbs().maxCoeff() == 0.0) {
    state.iter += 2;
    return;
  }

  // Delta-equation with the current implicit coefficients; two flexible
  // fixed-point steps with (alpha, beta) then its conjugate.
  NareProblem delta;
  delta.kind =
      problem.has_mass() ? ProblemKind::generalized : ProblemKind::plain;
  Matrix ak = problem.A.to_dense() - state.LPhik * problem.RC;
  Matrix dk = problem.D.to_dense() - problem.LC * state.RPhik;
  if (problem.LA.size() > 0) ak -= problem.LA * problem.RA;
  if (problem.LD.size() > 0) dk -= problem.LD * problem.RD;
  delta.A = SquareOperator::Dense(std::move(ak));
  delta.D = SquareOperator::Dense(std::move(dk));
  delta.LB = state.LBk;
  delta.RB = state.RBk;
  delta.LC = problem.LC;
  delta.RC = problem.RC;
  delta.M = problem.M;
  delta.N = problem.N;

  const std::vector<ShiftPair> pair_seq{shift, conjugate_shift(shift)};
  ComplexMatrix d2c;
  ComplexMatrix lb2c, rb2c;
  try {
    d2c = oracle::closed_form_solution(delta, pair_seq, 2);
    auto fac = oracle::residual_factors_closed(delta, pair_seq, 2);
    lb2c = fac.first;
    rb2c = fac.second;
  } catch (const AssumptionViolated& e) {
    throw SingularUpsilon(std::string("debug double step: ") + e.what());
  } catch (const IterationBreakdown& e) {
    throw SingularUpsilon(std::string("debug double step: ") + e.what());
  }

  const double scale = 1.0 + d2c.real().norm();
  if (d2c.imag().norm() > 1e-8 * scale)
    throw NareError("conjugate double step left a complex update");
  const Matrix d2 = d2c.real();

  // rank-revealing split of the dense update into exactly 2p columns
  const Index k = std::min<Index>(2 * p, std::min(m, n));
  Eigen::ColPivHouseholderQR<Matrix> qr(d2);
  const Matrix thin_q = qr.householderQ() * Matrix::Identity(m, k);
  const Matrix rfac = qr.matrixR()
                          .topRows(k)
                          .template triangularView<Eigen::Upper>()
                          .toDenseMatrix() *
                      qr.colsPermutation().transpose();

  // mass-weighted residual factors: the closed form works on the reduced
  // problem, the state carries M (.) N weighted ones
  Matrix lb2 = lb2c.real();
  Matrix rb2 = rb2c.real();
  if (!problem.M.empty()) lb2 = problem.M.apply(lb2);
  if (!problem.N.empty()) rb2 = problem.N.apply_right(rb2);
  state.LBk = lb2;
  state.RBk = rb2;
  // A_{k+2} = A_k - M Delta C, D_{k+2} = D_k - C Delta N
  Matrix md2 = problem.M.empty() ? d2 : problem.M.apply(d2);
  Matrix d2n = problem.N.empty() ? d2 : problem.N.apply_right(d2);
  state.LPhik += md2 * problem.LC;
  state.RPhik += problem.RC * d2n;
  append_blocks(problem, state, thin_q, rfac);
  state.iter += 2;
}

SolveResult solve(const NareProblem& problem, const ShiftStrategy& strategy,
                  const SolveOptions& options, const RecordSink& sink) {
  ShiftedSolverService service(
      problem.A, problem.M.empty() ? std::nullopt : std::optional(problem.M),
      problem.D, problem.N.empty() ? std::nullopt : std::optional(problem.N));

  ShiftStrategy strat = strategy;
  // CARE problems reuse one factorization for both sides when alpha == beta
  if (problem.kind == ProblemKind::care) strat.force_equal = true;

  ShiftScheduler scheduler(problem, strat, service,
                           /*require_real_pairing=*/options.real_arithmetic);

  SolveResult result;
  result.state = initialize(problem);
  RadiState& st = result.state;

  double nu = residual_norm(st);
  int consecutive_failures = 0;
  while (true) {
    if (std::isnan(nu)) {
      result.cause = StopCause::nan_encountered;
      break;
    }
    if (nu < options.tol) {
      result.cause = StopCause::converged;
      break;
    }
    if (nu >= options.div_threshold) {
      result.cause = StopCause::diverged;
      break;
    }
    if (st.iter >= options.max_iter) {
      result.cause = StopCause::max_iterations;
      break;
    }

    const auto iter_t0 = Clock::now();
    const double solver_before = service.seconds();

    ShiftPair shift;
    try {
      shift = scheduler.next(make_projection_inputs(st));
    } catch (const NoValidShift&) {
      result.cause = StopCause::shift_starvation;
      break;
    }
    const double solver_during_shift = service.seconds() - solver_before;
    const double t_shift =
        std::max(0.0, seconds_since(iter_t0) - solver_during_shift);

    try {
      if (!shift.is_real) {
        if (options.real_arithmetic && problem.kind != ProblemKind::weak)
          step_complex_pair(problem, st, shift, service);
        else
          step_complex_dense_debug(problem, st, shift);
      } else if (problem.kind == ProblemKind::weak) {
        step_weak(problem, st, shift, service);
      } else {
        step_real(problem, st, shift, service);
      }
    } catch (const SingularUpsilon&) {
      if (++consecutive_failures >= 5) {
        result.cause = StopCause::shift_starvation;
        break;
      }
      continue;
    } catch (const DegeneratePsi&) {
      if (++consecutive_failures >= 5) {
        result.cause = StopCause::shift_starvation;
        break;
      }
      continue;
    }
    consecutive_failures = 0;
    result.accepted_shifts.push_back(shift);

    nu = residual_norm(st);
    const double t_solve = service.seconds() - solver_before;
    const double total = seconds_since(iter_t0);
    ConvergenceRecord rec;
    rec.iter = st.iter;
    rec.dim = st.dim();
    rec.nu = nu;
    rec.shift = shift;
    rec.t_shift_s = t_shift;
    rec.t_solve_s = t_solve;
    rec.t_other_s = std::max(0.0, total - t_shift - t_solve);
    st.history.push_back(rec);
    if (sink) sink(rec);
  }
  return result;
}

}  // namespace nare
