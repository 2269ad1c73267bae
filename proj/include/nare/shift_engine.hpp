#pragma once

#include <deque>
#include <utility>
#include <vector>

#include "nare/linear_solver.hpp"
#include "nare/problem.hpp"
#include "nare/types.hpp"

namespace nare {

/// Orthonormal bases spanning the last few per-step solution blocks.
struct ProjectionBasis {
  Matrix PiL;  ///< m x rL, orthonormal columns
  Matrix PiR;  ///< rR x n, orthonormal rows
  int age = 0;
  bool rank_deficient = false;  ///< window columns were dropped (s shrank)
};

enum class StrategyKind { leja, hamiltonian, user };

/// Which spectral class feeds the poles (-alpha) versus the zeros (beta).
/// `consistent` is the greedy that directly improves the separation ratio;
/// `paper_literal` applies the extrema the other way around.
enum class Orientation { consistent, paper_literal };

struct ShiftStrategy {
  StrategyKind kind = StrategyKind::leja;
  int s = 1;        ///< projection window length in blocks
  int s_prime = 0;  ///< shifts consumed per projection; 0 = all generated
  bool recompute_each_iteration = false;
  Orientation orientation = Orientation::consistent;
  bool force_equal = false;  ///< alpha := beta, for CARE factorization reuse
  std::vector<ShiftPair> user_shifts;  ///< kind == user: cycled
};

struct Disk {
  Complex center{};
  double radius = 0.0;
};

struct ShiftDiagnostics {
  double kappa_t = 0.0;
  Disk stable_disk, anti_disk;
  double center_distance = 0.0;
  double p = 0.0;
  double asymptotic_rate = 0.0;  ///< p + sqrt(p^2 - 1), valid when p > 1
  bool rate_unbounded = false;   ///< a point disk makes the rate infinite
};

struct ProjectedEigenpair {
  Complex lambda;
  double q_norm = 0.0;  ///< norm of the Pi_L-side eigenvector tail
};

/// Everything the shift machinery needs to see of the iteration state.
struct ProjectionInputs {
  std::vector<Matrix> window_left;   ///< per-step L-blocks, oldest first
  std::vector<Matrix> window_right;  ///< per-step R-blocks, oldest first
  Matrix LBk, RBk;                   ///< current residual factors
  Matrix LPhik, RPhik;               ///< current implicit-update factors
};

/// Column-pivoted orthonormalization of the stacked window blocks with drop
/// tolerance 1e-12 relative to the largest column.
ProjectionBasis build_projection(const std::vector<Matrix>& left_blocks,
                                 const std::vector<Matrix>& right_blocks);

/// proj(H_k) on the window bases (last `s` blocks; the residual factors seed
/// the subspace when no step blocks exist yet). A_k, D_k enter implicitly as
/// A - LPhi RC and D - LC RPhi (plus the weak offsets when present).
std::pair<Matrix, ProjectionBasis> project_hamiltonian(
    const NareProblem& problem, const ProjectionInputs& inputs, int s);

/// Eigenpairs of the projected matrix with unit-normalized vectors split as
/// [r (top_dim); q].
std::vector<ProjectedEigenpair> projected_eigenpairs(const Matrix& h_proj,
                                                     Index top_dim);

/// Greedy generalized Leja pairs on two discrete candidate sets. The first
/// pair minimizes the cross-set distance; later pairs follow the configured
/// orientation. Nonreal selections are followed by their conjugates when
/// `real_closure` is set (the result may exceed `count` by one).
std::vector<ShiftPair> leja_generate(std::vector<Complex> stable_set,
                                     std::vector<Complex> anti_set, int count,
                                     Orientation orientation = Orientation::consistent,
                                     bool real_closure = false);

/// Residual-Hamiltonian pairing: one class sorted by decreasing eigenvector
/// tail norm supplies the -alpha sequence, the other sorted increasing
/// supplies beta. Eigenvalues within axis_tol of the axis count as
/// anti-stable.
std::vector<ShiftPair> hamiltonian_shifts(
    const std::vector<ProjectedEigenpair>& eigenpairs, Orientation orientation,
    double axis_tol);

Disk smallest_enclosing_disk(const std::vector<Complex>& points);

/// Separation ratio of C_{t,t} on the two sets plus the enclosing-disk rate.
ShiftDiagnostics kappa_diagnostics(const std::vector<ShiftPair>& shifts,
                                   const std::vector<Complex>& stable_set,
                                   const std::vector<Complex>& anti_set);

/// Queue policy around the generators: regenerates after s' consumed shifts
/// (one extra slot when the s'-th is nonreal), probes every candidate through
/// the factorization service, skips invalid ones and perturbs the last
/// candidate before giving up.
class ShiftScheduler {
 public:
  ShiftScheduler(const NareProblem& problem, ShiftStrategy strategy,
                 ShiftedSolverService& service, bool require_real_pairing);

  ShiftPair next(const ProjectionInputs& inputs);

  int generations() const { return generations_; }
  const std::vector<ShiftPair>& history() const { return handed_out_; }

 private:
  void regenerate(const ProjectionInputs& inputs);
  bool probe(const ShiftPair& s) const;
  int budget() const;

  const NareProblem& problem_;
  ShiftStrategy strategy_;
  ShiftedSolverService& service_;
  bool require_real_pairing_;
  std::deque<ShiftPair> queue_;
  int generation_size_ = 0;
  int consumed_ = 0;
  int generations_ = 0;
  std::size_t user_cursor_ = 0;
  std::vector<ShiftPair> handed_out_;
};

}  // namespace nare
