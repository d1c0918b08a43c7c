#pragma once

#include <functional>

#include "thermiga/config.hpp"
#include "thermiga/postproc.hpp"

namespace thermiga {

/// Apply the refinement spec: explicit knots win, otherwise per-direction
/// element counts with optional grading; the target-size mode derives the
/// first-direction count from the scanned edge of the target face.
NurbsVolume refine_for_spec(const NurbsVolume& base, const MeshSpec& spec);

/// Everything assembled once per run.
struct Simulation {
  RunConfig cfg;
  Mesh mesh;  // owns the refined volume
  DofMap dofs;
  BoundarySets boundary;
  std::vector<PointSource> sources;
  MeshStats stats;
  SystemMatrices matrices;
  double dt_solver = 0.0;
  int n_steps = 0;
  int threads = 1;

  // phase timings, seconds
  double time_assembly = 0.0;
  double time_loads = 0.0;
  double time_solve = 0.0;
  long cg_iterations = 0;

  const NurbsVolume& volume() const { return mesh.volume(); }
};

Simulation prepare_simulation(RunConfig cfg, int n_threads = 1);

/// Called with the state after every step (and once with the initial state),
/// together with the full control-coefficient vector of the correction field.
using StepCallback = std::function<void(const State&, const std::vector<double>&)>;

void run_time_loop(Simulation& sim, const StepCallback& on_state);

/// Snap an output instant to a step index; throws when beyond the run.
int step_for_time(const Simulation& sim, double t);

struct RunOptions {
  std::string output_dir;  // empty: use the config's directory
  int threads = 1;
  bool verbose = false;
};

void cmd_simulate(const RunConfig& cfg, const RunOptions& opts);
void cmd_convergence(const RunConfig& cfg, std::vector<std::array<int, 3>> levels,
                     const RunOptions& opts);
void cmd_flux_report(const RunConfig& cfg, std::vector<double> times, const RunOptions& opts);

}  // namespace thermiga
