#pragma once

#include "thermiga/assembly.hpp"

namespace thermiga {

/// One-parameter implicit time integrator; theta = 0.5 (Crank-Nicolson)
/// gives second-order accuracy and unconditional stability.
struct ThetaScheme {
  double theta = 0.5;
  double dt;
};

/// Discrete correction field at one time level. Coefficients are degC rise
/// above the platform temperature.
struct State {
  std::vector<double> free_coeffs;
  std::vector<double> constrained_values;
  int step = 0;
  double time = 0.0;
};

/// Advance one step: solve (M/dt + theta K) T_{n+1} = (M/dt - (1-theta) K) T_n
/// + theta F_{n+1} + (1-theta) F_n with Dirichlet lifting. The previous free
/// coefficients warm-start the CG iteration.
State theta_step(const DirichletSystem& system, const State& state_n,
                 std::span<const double> load_n, std::span<const double> load_np1,
                 std::span<const double> constrained_np1, const PcgOptions& solver_opts,
                 PcgResult* solve_stats = nullptr);

}  // namespace thermiga
