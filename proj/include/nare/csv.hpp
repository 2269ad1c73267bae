#pragma once

#include <string>
#include <vector>

#include "nare/radi.hpp"

namespace nare {

/// Header `iter,dim,nu,alpha_re,alpha_im,beta_re,beta_im,t_shift_s,t_solve_s,t_other_s`,
/// one row per iteration, floats with 17 significant digits.
void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path);

}  // namespace nare
