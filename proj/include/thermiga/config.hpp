#pragma once

#include <optional>
#include <string>

#include "thermiga/analytic.hpp"
#include "thermiga/mesh.hpp"

namespace thermiga {

/// Refinement and quadrature specification. The first direction can instead
/// be driven by a target minimum element size on a named face, matching the
/// mesh-coarseness parameterization used in the benchmark studies.
struct MeshSpec {
  std::array<std::vector<double>, 3> explicit_knots;  // wins when non-empty
  std::array<int, 3> elements{0, 0, 0};               // 0 = keep existing spans
  std::array<double, 3> grading{1.0, 1.0, 1.0};
  std::array<double, 3> focus{0.0, 0.0, 0.0};
  std::optional<FaceId> target_face;
  double target_min_size = 0.0;  // m, on the target face's scanned edge
  int quad_order = 0;            // Gauss points per direction; 0 = degree+1
  int boundary_quad_multiplier = 3;
  double elevate_radius = 5e-4;  // m, fine boundary rule near the active source
};

struct SteppingSpec {
  double theta = 0.5;
  double dt = 0.0;  // s; 0 = use the laser exposure step
  double t_end = 0.0;
  double solver_tol = 1e-10;
  int max_iter = 5000;
  int substeps = 1;
};

struct ProbeSpec {
  std::string name;
  Vec3 xi;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<ProbeSpec> probes;
  int probe_interval = 1;
  std::vector<double> field_times;
  std::array<int, 3> field_grid{17, 9, 9};
  std::optional<FaceId> profile_face;
  int profile_samples = 400;
  double profile_edge_v = 1.0;  // 1 = top edge; lower values resolve depth
  std::vector<double> profile_times;
  std::optional<std::array<double, 2>> theta_center;
};

struct ConvergenceSpec {
  std::vector<std::array<int, 3>> levels;  // element counts per direction
  std::optional<double> eval_time;         // default: t_end
  std::string probe;                       // default: first configured probe
};

struct RunConfig {
  NurbsVolume geometry;
  Material material;
  LaserSpec laser;
  ScanPath scan;
  BoundaryTags tags;
  MeshSpec mesh;
  SteppingSpec stepping;
  OutputSpec outputs;
  ConvergenceSpec convergence;
  SuperposeOptions superpose;
};

/// Parse and fully validate a run configuration. Unknown keys are rejected;
/// every diagnostic carries the offending key and line.
RunConfig parse_config(const std::string& path);

/// Geometry block I/O (the same key/value schema as the [geometry] section).
NurbsVolume read_geometry_file(const std::string& path);
void write_geometry_file(const NurbsVolume& vol, const std::string& path);

}  // namespace thermiga
