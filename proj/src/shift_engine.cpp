#include "nare/shift_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace nare {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool complex_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Sort by (re, im) and collapse points closer than 1e-12 relative.
std::vector<Complex> dedup_sorted(std::vector<Complex> pts) {
  std::sort(pts.begin(), pts.end(), complex_less);
  std::vector<Complex> out;
  for (const Complex& z : pts) {
    if (!out.empty() && std::abs(z - out.back()) <= 1e-12 * (1.0 + std::abs(z)))
      continue;
    out.push_back(z);
  }
  return out;
}

/// log |C_{k,k}(z)| over the pairs chosen so far; +-inf at zeros and poles.
double log_abs_rational(const std::vector<ShiftPair>& pairs, Complex z) {
  double s = 0.0;
  for (const auto& pr : pairs)
    s += std::log(std::abs(pr.beta - z)) - std::log(std::abs(z + pr.alpha));
  return s;
}

bool same_shift(Complex a, Complex b) {
  return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b));
}

bool is_conjugate_pair(const ShiftPair& a, const ShiftPair& b) {
  return same_shift(a.alpha, std::conj(b.alpha)) &&
         same_shift(a.beta, std::conj(b.beta));
}

/// Exactly one of alpha, beta is nonreal; the real-arithmetic double step
/// cannot represent such a pair.
bool mixed_pair(const ShiftPair& s) {
  const double tol = shift_imag_tol(s.alpha, s.beta);
  const bool a_real = std::abs(s.alpha.imag()) <= tol;
  const bool b_real = std::abs(s.beta.imag()) <= tol;
  return a_real != b_real;
}

Matrix orthonormal_columns(const std::vector<Matrix>& blocks, bool* deficient) {
  Index rows = blocks.front().rows();
  Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix stack(rows, cols);
  Index off = 0;
  for (const auto& b : blocks) {
    stack.middleCols(off, b.cols()) = b;
    off += b.cols();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(stack);
  qr.setThreshold(1e-12);
  const Index rank = qr.rank();
  if (rank == 0) throw NareError("projection window spans nothing");
  *deficient = rank < cols;
  return qr.householderQ() * Matrix::Identity(rows, rank);
}

}  // namespace

ProjectionBasis build_projection(const std::vector<Matrix>& left_blocks,
                                 const std::vector<Matrix>& right_blocks) {
  if (left_blocks.empty() || right_blocks.empty())
    throw NareError("projection window is empty");
  ProjectionBasis basis;
  bool def_l = false, def_r = false;
  basis.PiL = orthonormal_columns(left_blocks, &def_l);
  std::vector<Matrix> transposed;
  transposed.reserve(right_blocks.size());
  for (const auto& b : right_blocks) transposed.push_back(b.transpose());
  basis.PiR = orthonormal_columns(transposed, &def_r).transpose();
  basis.rank_deficient = def_l || def_r;
  return basis;
}

std::pair<Matrix, ProjectionBasis> project_hamiltonian(
    const NareProblem& problem, const ProjectionInputs& inputs, int s) {
  const int avail = std::min<int>(s, int(inputs.window_left.size()));
  std::vector<Matrix> lb, rb;
  if (avail == 0) {
    lb = {inputs.LBk};
    rb = {inputs.RBk};
  } else {
    lb.assign(inputs.window_left.end() - avail, inputs.window_left.end());
    rb.assign(inputs.window_right.end() - avail, inputs.window_right.end());
  }
  ProjectionBasis basis = build_projection(lb, rb);

  const Matrix pil_t = basis.PiL.transpose();
  const Matrix pir_t = basis.PiR.transpose();
  const Index rl = basis.PiL.cols(), rr = basis.PiR.rows();

  Matrix dp = basis.PiR * problem.D.apply(pir_t);
  if (inputs.RPhik.size() > 0)
    dp -= (basis.PiR * problem.LC) * (inputs.RPhik * pir_t);
  if (problem.LD.size() > 0)
    dp -= (basis.PiR * problem.LD) * (problem.RD * pir_t);

  const Matrix cp = (basis.PiR * problem.LC) * (problem.RC * basis.PiL);
  const Matrix bp = (pil_t * inputs.LBk) * (inputs.RBk * pir_t);

  Matrix ap = pil_t * problem.A.apply(basis.PiL);
  if (inputs.LPhik.size() > 0)
    ap -= (pil_t * inputs.LPhik) * (problem.RC * basis.PiL);
  if (problem.LA.size() > 0)
    ap -= (pil_t * problem.LA) * (problem.RA * basis.PiL);

  Matrix h(rr + rl, rr + rl);
  h.topLeftCorner(rr, rr) = dp;
  h.topRightCorner(rr, rl) = -cp;
  h.bottomLeftCorner(rl, rr) = bp;
  h.bottomRightCorner(rl, rl) = -ap;
  return {h, basis};
}

std::vector<ProjectedEigenpair> projected_eigenpairs(const Matrix& h_proj,
                                                     Index top_dim) {
  Eigen::EigenSolver<Matrix> es(h_proj, true);
  if (es.info() != Eigen::Success)
    throw NareError("projected eigenproblem did not converge");
  const Index nn = h_proj.rows();
  std::vector<ProjectedEigenpair> out;
  out.reserve(nn);
  for (Index i = 0; i < nn; ++i) {
    ComplexVector v = es.eigenvectors().col(i);
    v /= v.norm();
    out.push_back({es.eigenvalues()(i), v.tail(nn - top_dim).norm()});
  }
  return out;
}

std::vector<ShiftPair> leja_generate(std::vector<Complex> stable_set,
                                     std::vector<Complex> anti_set, int count,
                                     Orientation orientation,
                                     bool real_closure) {
  if (stable_set.empty() || anti_set.empty())
    throw EmptyCandidates("leja_generate needs both candidate sets");
  const std::vector<Complex> stable = dedup_sorted(std::move(stable_set));
  const std::vector<Complex> anti = dedup_sorted(std::move(anti_set));

  std::vector<ShiftPair> out;
  auto emit = [&](Complex za, Complex zs) {
    ShiftPair pr = make_shift(-std::conj(za), zs, ShiftOrigin::leja);
    out.push_back(pr);
    if (real_closure && !pr.is_real) out.push_back(conjugate_shift(pr));
  };

  // first pair: minimal cross-set distance, first index on ties
  {
    double best = kInf;
    Complex za = anti.front(), zs = stable.front();
    for (const Complex& a : anti)
      for (const Complex& s : stable) {
        const double d = std::abs(a - s);
        if (d < best) {
          best = d;
          za = a;
          zs = s;
        }
      }
    emit(za, zs);
  }

  while (int(out.size()) < count) {
    double best_s = orientation == Orientation::consistent ? -kInf : kInf;
    Complex zs = stable.front();
    for (const Complex& s : stable) {
      const double v = log_abs_rational(out, s);
      const bool better = orientation == Orientation::consistent ? v > best_s
                                                                 : v < best_s;
      if (better) {
        best_s = v;
        zs = s;
      }
    }
    double best_a = orientation == Orientation::consistent ? kInf : -kInf;
    Complex za = anti.front();
    for (const Complex& a : anti) {
      const double v = log_abs_rational(out, a);
      const bool better = orientation == Orientation::consistent ? v < best_a
                                                                 : v > best_a;
      if (better) {
        best_a = v;
        za = a;
      }
    }
    emit(za, zs);
  }
  return out;
}

std::vector<ShiftPair> hamiltonian_shifts(
    const std::vector<ProjectedEigenpair>& eigenpairs, Orientation orientation,
    double axis_tol) {
  std::vector<ProjectedEigenpair> stable, anti;
  for (const auto& e : eigenpairs) {
    if (e.lambda.real() < -axis_tol)
      stable.push_back(e);
    else
      anti.push_back(e);  // the closed right half-plane counts as anti-stable
  }
  if (stable.empty() || anti.empty())
    throw EmptyCandidates("projected spectrum falls entirely on one side");

  // ties keep conjugate eigenvalues adjacent, positive imaginary part first
  auto by_decreasing_q = [](const ProjectedEigenpair& x,
                            const ProjectedEigenpair& y) {
    if (x.q_norm != y.q_norm) return x.q_norm > y.q_norm;
    if (x.lambda.real() != y.lambda.real())
      return x.lambda.real() < y.lambda.real();
    if (std::abs(x.lambda.imag()) != std::abs(y.lambda.imag()))
      return std::abs(x.lambda.imag()) < std::abs(y.lambda.imag());
    return x.lambda.imag() > y.lambda.imag();
  };
  auto by_increasing_q = [&](const ProjectedEigenpair& x,
                             const ProjectedEigenpair& y) {
    if (x.q_norm != y.q_norm) return x.q_norm < y.q_norm;
    if (x.lambda.real() != y.lambda.real())
      return x.lambda.real() < y.lambda.real();
    if (std::abs(x.lambda.imag()) != std::abs(y.lambda.imag()))
      return std::abs(x.lambda.imag()) < std::abs(y.lambda.imag());
    return x.lambda.imag() > y.lambda.imag();
  };

  std::vector<ProjectedEigenpair>& pole_src =
      orientation == Orientation::paper_literal ? stable : anti;
  std::vector<ProjectedEigenpair>& zero_src =
      orientation == Orientation::paper_literal ? anti : stable;
  std::sort(pole_src.begin(), pole_src.end(), by_decreasing_q);
  std::sort(zero_src.begin(), zero_src.end(), by_increasing_q);

  const std::size_t k = std::min(pole_src.size(), zero_src.size());
  std::vector<ShiftPair> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(make_shift(-pole_src[i].lambda, zero_src[i].lambda,
                             ShiftOrigin::hamiltonian));
  return out;
}

Disk smallest_enclosing_disk(const std::vector<Complex>& points) {
  if (points.empty()) throw EmptyCandidates("enclosing disk of an empty set");
  auto covers = [&](Complex c, double r) {
    const double lim = r * (1.0 + 1e-12) + 1e-300;
    for (const Complex& p : points)
      if (std::abs(p - c) > lim) return false;
    return true;
  };

  Disk best{points.front(), kInf};
  if (points.size() == 1) return {points.front(), 0.0};

  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex c = 0.5 * (points[i] + points[j]);
      const double r = 0.5 * std::abs(points[i] - points[j]);
      if (r < best.radius && covers(c, r)) best = {c, r};
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const Complex p1 = points[i], p2 = points[j], p3 = points[k];
        const double d = 2.0 * (p1.real() * (p2.imag() - p3.imag()) +
                                p2.real() * (p3.imag() - p1.imag()) +
                                p3.real() * (p1.imag() - p2.imag()));
        const double scale = std::abs(p1) + std::abs(p2) + std::abs(p3) + 1.0;
        if (std::abs(d) <= 1e-14 * scale * scale) continue;  // collinear
        const double n1 = std::norm(p1), n2 = std::norm(p2), n3 = std::norm(p3);
        const Complex c(
            (n1 * (p2.imag() - p3.imag()) + n2 * (p3.imag() - p1.imag()) +
             n3 * (p1.imag() - p2.imag())) /
                d,
            (n1 * (p3.real() - p2.real()) + n2 * (p1.real() - p3.real()) +
             n3 * (p2.real() - p1.real())) /
                d);
        const double r = std::abs(points[i] - c);
        if (r < best.radius && covers(c, r)) best = {c, r};
      }
  return best;
}

ShiftDiagnostics kappa_diagnostics(const std::vector<ShiftPair>& shifts,
                                   const std::vector<Complex>& stable_set,
                                   const std::vector<Complex>& anti_set) {
  if (stable_set.empty() || anti_set.empty())
    throw EmptyCandidates("kappa_diagnostics needs both sets");
  double max_stable = -kInf, min_anti = kInf;
  for (const Complex& z : stable_set) {
    const double v = log_abs_rational(shifts, z);
    if (std::isnan(v)) throw PoleHit("zero/pole collision on the stable set");
    max_stable = std::max(max_stable, v);
  }
  for (const Complex& z : anti_set) {
    const double v = log_abs_rational(shifts, z);
    if (std::isnan(v)) throw PoleHit("zero/pole collision on the anti set");
    min_anti = std::min(min_anti, v);
  }

  ShiftDiagnostics d;
  d.kappa_t = std::exp(min_anti - max_stable);
  d.stable_disk = smallest_enclosing_disk(stable_set);
  d.anti_disk = smallest_enclosing_disk(anti_set);
  d.center_distance = std::abs(d.stable_disk.center - d.anti_disk.center);
  const double a = d.stable_disk.radius, b = d.anti_disk.radius;
  if (a == 0.0 || b == 0.0) {
    d.rate_unbounded = true;
    d.asymptotic_rate = kInf;
    d.p = kInf;
    return d;
  }
  d.p = (d.center_distance * d.center_distance - a * a - b * b) / (2.0 * a * b);
  if (d.p > 1.0) d.asymptotic_rate = d.p + std::sqrt(d.p * d.p - 1.0);
  return d;
}

ShiftScheduler::ShiftScheduler(const NareProblem& problem,
                               ShiftStrategy strategy,
                               ShiftedSolverService& service,
                               bool require_real_pairing)
    : problem_(problem),
      strategy_(std::move(strategy)),
      service_(service),
      require_real_pairing_(require_real_pairing) {}

bool ShiftScheduler::probe(const ShiftPair& s) const {
  if (std::abs(s.alpha + s.beta) <= pair_tol(s)) return false;
  try {
    service_.factor(Side::A_side, s.beta);
    service_.factor(Side::D_side, s.alpha);
  } catch (const SingularShift&) {
    return false;
  } catch (const IllConditionedShift&) {
    return false;
  }
  return true;
}

int ShiftScheduler::budget() const {
  return strategy_.s_prime > 0 ? strategy_.s_prime : generation_size_;
}

void ShiftScheduler::regenerate(const ProjectionInputs& inputs) {
  auto [h, basis] = project_hamiltonian(problem_, inputs, strategy_.s);
  const double tol = 1e-10 * (1.0 + h.norm());
  const auto eigs = projected_eigenpairs(h, basis.PiR.rows());

  std::vector<ShiftPair> pairs;
  try {
    if (strategy_.kind == StrategyKind::hamiltonian) {
      pairs = hamiltonian_shifts(eigs, strategy_.orientation, tol);
      if (require_real_pairing_) {
        // make each nonreal pair explicitly followed by its conjugate
        std::vector<ShiftPair> closed;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          closed.push_back(pairs[i]);
          if (pairs[i].is_real) continue;
          if (i + 1 < pairs.size() &&
              is_conjugate_pair(pairs[i + 1], pairs[i])) {
            closed.push_back(pairs[++i]);
          } else {
            closed.push_back(conjugate_shift(pairs[i]));
          }
        }
        pairs = std::move(closed);
      }
    } else {
      std::vector<Complex> stable, anti;
      for (const auto& e : eigs)
        (e.lambda.real() < -tol ? stable : anti).push_back(e.lambda);
      if (stable.empty() || anti.empty()) throw EmptyCandidates("one-sided");
      const int count = int(std::min(stable.size(), anti.size()));
      pairs = leja_generate(stable, anti, count, strategy_.orientation,
                            require_real_pairing_);
    }
  } catch (const EmptyCandidates&) {
    // One spectral class is empty (M-matrix or near-critical problems).
    // Mirror the populated class across the imaginary axis so the greedy
    // still has two sets to work with.
    std::vector<Complex> stable, anti;
    for (const auto& e : eigs)
      (e.lambda.real() < -tol ? stable : anti).push_back(e.lambda);
    if (stable.empty())
      for (const Complex& z : anti)
        if (z.real() > tol) stable.push_back(-std::conj(z));
    if (anti.empty())
      for (const Complex& z : stable) anti.push_back(-std::conj(z));
    if (stable.empty()) stable.push_back(Complex(-1.0, 0.0));
    if (anti.empty()) anti.push_back(Complex(1.0, 0.0));
    const int count = int(std::max<std::size_t>(
        1, std::min(stable.size(), anti.size())));
    pairs = leja_generate(stable, anti, count, strategy_.orientation,
                          require_real_pairing_);
  }

  if (strategy_.force_equal) {
    for (auto& s : pairs) {
      if (strategy_.orientation == Orientation::paper_literal)
        s = make_shift(s.alpha, s.alpha, s.origin);
      else
        s = make_shift(s.beta, s.beta, s.origin);
    }
  }

  queue_.assign(pairs.begin(), pairs.end());
  generation_size_ = int(queue_.size());
  consumed_ = 0;
  ++generations_;
}

ShiftPair ShiftScheduler::next(const ProjectionInputs& inputs) {
  if (strategy_.kind == StrategyKind::user) {
    if (strategy_.user_shifts.empty())
      throw NoValidShift("user strategy without shifts");
    ShiftPair last{};
    for (std::size_t tries = 0; tries < strategy_.user_shifts.size(); ++tries) {
      ShiftPair cand =
          strategy_.user_shifts[user_cursor_++ % strategy_.user_shifts.size()];
      cand = make_shift(cand.alpha, cand.beta, ShiftOrigin::user);
      last = cand;
      if (require_real_pairing_ && !cand.is_real && mixed_pair(cand)) continue;
      if (probe(cand)) {
        handed_out_.push_back(cand);
        return cand;
      }
    }
    ShiftPair pert = make_shift(last.alpha + 1e-8 * (1.0 + std::abs(last.alpha)),
                                last.beta + 1e-8 * (1.0 + std::abs(last.beta)),
                                ShiftOrigin::user);
    if (probe(pert)) {
      handed_out_.push_back(pert);
      return pert;
    }
    throw NoValidShift("all user shifts failed the factorization probe");
  }

  int regens = 0;
  if (strategy_.recompute_each_iteration) {
    regenerate(inputs);
    regens = 1;
  }
  ShiftPair last{};
  bool have_last = false;
  while (true) {
    if (queue_.empty() || consumed_ >= budget()) {
      if (regens >= 3) break;
      regenerate(inputs);
      ++regens;
      if (queue_.empty()) break;
    }
    ShiftPair cand = queue_.front();
    queue_.pop_front();
    int units = 1;
    if (!cand.is_real) {
      units = 2;
      // the conjugate partner is implicit in the double step
      if (!queue_.empty() && is_conjugate_pair(queue_.front(), cand))
        queue_.pop_front();
    }
    last = cand;
    have_last = true;
    if (require_real_pairing_ && !cand.is_real && mixed_pair(cand)) continue;
    if (!probe(cand)) continue;
    consumed_ += units;
    handed_out_.push_back(cand);
    return cand;
  }

  if (have_last) {
    ShiftPair pert = make_shift(last.alpha + 1e-8 * (1.0 + std::abs(last.alpha)),
                                last.beta + 1e-8 * (1.0 + std::abs(last.beta)),
                                last.origin);
    if (!(require_real_pairing_ && !pert.is_real && mixed_pair(pert)) &&
        probe(pert)) {
      consumed_ += pert.is_real ? 1 : 2;
      handed_out_.push_back(pert);
      return pert;
    }
  }
  throw NoValidShift("no shift candidate passed the factorization probe");
}

}  // namespace nare
