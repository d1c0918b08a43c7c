#include "thermiga/timestep.hpp"

namespace thermiga {

State theta_step(const DirichletSystem& system, const State& state_n,
                 std::span<const double> load_n, std::span<const double> load_np1,
                 std::span<const double> constrained_np1, const PcgOptions& solver_opts,
                 PcgResult* solve_stats) {
  std::vector<double> full_n;
  system.expand(state_n.free_coeffs, state_n.constrained_values, full_n);

  std::vector<double> rhs;
  system.step_rhs(full_n, constrained_np1, load_n, load_np1, rhs);

  State next;
  next.free_coeffs = state_n.free_coeffs;  // warm start
  const PcgResult res =
      pcg_jacobi(system.reduced_operator(), rhs, next.free_coeffs, solver_opts);
  if (solve_stats) *solve_stats = res;
  next.constrained_values.assign(constrained_np1.begin(), constrained_np1.end());
  next.step = state_n.step + 1;
  next.time = next.step * system.dt();
  return next;
}

}  // namespace thermiga
