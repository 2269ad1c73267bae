#pragma once

#include <functional>
#include <vector>

#include "nare/linear_solver.hpp"
#include "nare/problem.hpp"
#include "nare/shift_engine.hpp"
#include "nare/types.hpp"

namespace nare {

struct ConvergenceRecord {
  int iter = 0;
  Index dim = 0;   ///< columns of LX after the step
  double nu = 0.0;
  ShiftPair shift;
  double t_shift_s = 0.0, t_solve_s = 0.0, t_other_s = 0.0;
};

/// Accumulated low-rank iteration state. X_k = LX RX is never materialized at
/// scale; the residual satisfies R(X_k) = LBk RBk, and the coefficient drift
/// is carried implicitly as A_k = A - LPhik RC, D_k = D - LC RPhik.
struct RadiState {
  Matrix LX, RX;
  Matrix LBk, RBk;
  Matrix LPhik, RPhik;
  std::vector<Matrix> window_left;   ///< recent per-step L-blocks
  std::vector<Matrix> window_right;  ///< recent per-step R-blocks
  int iter = 0;
  double nu0 = 0.0;  ///< ||L^B R^B||_F at start
  std::vector<ConvergenceRecord> history;

  Index dim() const { return LX.cols(); }
};

enum class StopCause {
  converged,
  max_iterations,
  diverged,
  nan_encountered,
  shift_starvation
};

struct SolveOptions {
  double tol = 1e-12;
  int max_iter = 300;
  double div_threshold = 1e12;
  bool real_arithmetic = true;  ///< doubled real solves for nonreal shifts
};

struct SolveResult {
  RadiState state;
  StopCause cause = StopCause::converged;
  std::vector<ShiftPair> accepted_shifts;
};

RadiState initialize(const NareProblem& problem);

/// One step with a real shift (Algorithm lines for the real branch); exactly
/// p columns are appended. Throws SingularUpsilon with the state untouched
/// when the core factorization breaks down.
void step_real(const NareProblem& problem, RadiState& state,
               const ShiftPair& shift, ShiftedSolverService& service);

/// Double step applying (alpha, beta) and its conjugate entirely in real
/// arithmetic; 2p columns are appended.
void step_complex_pair(const NareProblem& problem, RadiState& state,
                       const ShiftPair& shift, ShiftedSolverService& service);

/// Real-shift step for the weakly-strengthened family: the LA/RA/LD/RD
/// offsets join the solves but are never updated.
void step_weak(const NareProblem& problem, RadiState& state,
               const ShiftPair& shift, ShiftedSolverService& service);

/// Dense-scale fallback for nonreal shifts in complex arithmetic (used for
/// the weak family and when real arithmetic is switched off); appends 2p
/// columns obtained by rank-revealing compression of the double-step update.
void step_complex_dense_debug(const NareProblem& problem, RadiState& state,
                              const ShiftPair& shift);

/// nu_k = ||LBk RBk||_F / ||L^B R^B||_F via the p x p Gram trace formula.
double residual_norm(const RadiState& state);

/// LX RX, guarded by kDenseGuard.
Matrix assemble_dense(const RadiState& state);

using RecordSink = std::function<void(const ConvergenceRecord&)>;

SolveResult solve(const NareProblem& problem, const ShiftStrategy& strategy,
                  const SolveOptions& options = {},
                  const RecordSink& sink = {});

/// View of the state consumed by the shift machinery.
ProjectionInputs make_projection_inputs(const RadiState& state);

}  // namespace nare
