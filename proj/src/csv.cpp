#include "nare/csv.hpp"

#include <cstdio>

namespace nare {

void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw NareError("cannot write " + path);
  std::fprintf(f,
               "iter,dim,nu,alpha_re,alpha_im,beta_re,beta_im,t_shift_s,"
               "t_solve_s,t_other_s\n");
  for (const auto& r : records)
    std::fprintf(f, "%d,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 r.iter, long(r.dim), r.nu, r.shift.alpha.real(),
                 r.shift.alpha.imag(), r.shift.beta.real(),
                 r.shift.beta.imag(), r.t_shift_s, r.t_solve_s, r.t_other_s);
  std::fclose(f);
}

}  // namespace nare
