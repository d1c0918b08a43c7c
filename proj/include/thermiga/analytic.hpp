#pragma once

#include <vector>

#include "thermiga/core.hpp"

namespace thermiga {

/// Constant thermal properties. Diffusivity is always derived, never stored.
struct Material {
  double conductivity;   // k, W/(m K)
  double density;        // rho, kg/m^3
  double heat_capacity;  // c_p, J/(kg K)
  double platform_temperature = 0.0;  // T_c, degC

  double diffusivity() const { return conductivity / (density * heat_capacity); }
  double volumetric_capacity() const { return density * heat_capacity; }
  void validate() const;
};

/// Laser process parameters.
struct LaserSpec {
  double power;         // P, W
  double speed;         // v, m/s
  double spot_radius;   // r_laser, m
  double absorptivity;  // A in (0,1]
  double dt;            // exposure step, s (source spacing = speed * dt)

  void validate() const;
};

/// One discretized laser exposure. The activation time is shifted backwards
/// by r^2/(8 alpha) so the field at activation already has the finite spot
/// width instead of a singular peak.
struct PointSource {
  Vec3 position;       // m, on the scan plane
  double energy;       // J
  double t_activate;   // s
  double tau;          // s, modified time = t_activate - r^2/(8 alpha)
};

/// Polyline scan path on the top plane.
struct ScanPath {
  std::vector<std::array<double, 2>> waypoints;  // m
  double start_time = 0.0;                       // s
  double plane_z = 0.0;                          // m, height of the scan plane
};

/// Place sources along the path at arc-length spacing speed*dt; source I
/// activates at start_time + I*dt and carries energy A*P*dt.
std::vector<PointSource> discretize_scan(const ScanPath& path, const LaserSpec& laser,
                                         const Material& mat);

/// Temperature rise of a single instantaneous point source in an unbounded
/// medium (degC above platform temperature). Exactly zero for t <= tau.
double temp_point_source(const PointSource& src, const Material& mat, const Vec3& x,
                         double t);

/// Spatial gradient of temp_point_source (degC/m). Zero vector for t <= tau.
Vec3 grad_point_source(const PointSource& src, const Material& mat, const Vec3& x, double t);

struct SuperposeOptions {
  /// Contributions with squared-distance exponent below -cull_exponent are
  /// skipped; they are beyond double-precision relevance.
  double cull_exponent = 60.0;
};

struct AnalyticField {
  double value = 0.0;  // degC rise
  Vec3 grad{0.0, 0.0, 0.0};
};

/// Superposed analytic field of all sources active at time t.
AnalyticField superpose(const std::vector<PointSource>& sources, const Material& mat,
                        const Vec3& x, double t, const SuperposeOptions& opts = {});

}  // namespace thermiga
