#include "thermiga/analytic.hpp"

#include <cmath>

namespace thermiga {

void Material::validate() const {
  if (!(conductivity > 0.0)) throw std::invalid_argument("material: conductivity must be > 0");
  if (!(density > 0.0)) throw std::invalid_argument("material: density must be > 0");
  if (!(heat_capacity > 0.0)) throw std::invalid_argument("material: heat capacity must be > 0");
}

void LaserSpec::validate() const {
  if (!(power >= 0.0)) throw std::invalid_argument("laser: power must be >= 0");
  if (!(speed > 0.0)) throw std::invalid_argument("laser: speed must be > 0");
  if (!(spot_radius > 0.0)) throw std::invalid_argument("laser: spot radius must be > 0");
  if (!(absorptivity > 0.0 && absorptivity <= 1.0))
    throw std::invalid_argument("laser: absorptivity must be in (0,1]");
  if (!(dt > 0.0)) throw std::invalid_argument("laser: exposure step must be > 0");
}

std::vector<PointSource> discretize_scan(const ScanPath& path, const LaserSpec& laser,
                                         const Material& mat) {
  laser.validate();
  mat.validate();
  if (path.waypoints.empty()) throw std::invalid_argument("scan path has no waypoints");

  const double energy = laser.absorptivity * laser.power * laser.dt;
  const double tau_shift =
      laser.spot_radius * laser.spot_radius / (8.0 * mat.diffusivity());

  auto make_source = [&](double x, double y, int index) {
    PointSource s;
    s.position = {x, y, path.plane_z};
    s.energy = energy;
    s.t_activate = path.start_time + index * laser.dt;
    s.tau = s.t_activate - tau_shift;
    return s;
  };

  std::vector<PointSource> sources;
  if (path.waypoints.size() == 1) {  // dwell: a single exposure
    sources.push_back(make_source(path.waypoints[0][0], path.waypoints[0][1], 0));
    return sources;
  }

  const double spacing = laser.speed * laser.dt;
  // cumulative arc length of the polyline
  std::vector<double> cum(path.waypoints.size(), 0.0);
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    const double dx = path.waypoints[i][0] - path.waypoints[i - 1][0];
    const double dy = path.waypoints[i][1] - path.waypoints[i - 1][1];
    cum[i] = cum[i - 1] + std::hypot(dx, dy);
  }
  const double total = cum.back();
  const int n_sources = static_cast<int>(std::floor(total / spacing * (1.0 + 1e-12))) + 1;

  std::size_t seg = 0;
  for (int I = 0; I < n_sources; ++I) {
    const double s = std::min(I * spacing, total);
    while (seg + 2 < path.waypoints.size() && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double f = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    const double x =
        path.waypoints[seg][0] + f * (path.waypoints[seg + 1][0] - path.waypoints[seg][0]);
    const double y =
        path.waypoints[seg][1] + f * (path.waypoints[seg + 1][1] - path.waypoints[seg][1]);
    sources.push_back(make_source(x, y, I));
  }
  return sources;
}

double temp_point_source(const PointSource& src, const Material& mat, const Vec3& x,
                         double t) {
  const double dt = t - src.tau;
  if (dt <= 0.0) return 0.0;
  const double alpha = mat.diffusivity();
  const double spread = 4.0 * alpha * dt;
  const Vec3 r = x - src.position;
  const double arg = r.dot(r) / spread;
  return src.energy / (mat.volumetric_capacity() * std::pow(M_PI * spread, 1.5)) *
         std::exp(-arg);
}

Vec3 grad_point_source(const PointSource& src, const Material& mat, const Vec3& x, double t) {
  const double dt = t - src.tau;
  if (dt <= 0.0) return {0.0, 0.0, 0.0};
  const double T = temp_point_source(src, mat, x, t);
  return (x - src.position) * (-T / (2.0 * mat.diffusivity() * dt));
}

AnalyticField superpose(const std::vector<PointSource>& sources, const Material& mat,
                        const Vec3& x, double t, const SuperposeOptions& opts) {
  AnalyticField out;
  const double alpha = mat.diffusivity();
  const double rcp = mat.volumetric_capacity();
  for (const auto& src : sources) {
    const double dt = t - src.tau;
    if (dt <= 0.0) continue;
    const double spread = 4.0 * alpha * dt;
    const Vec3 r = x - src.position;
    const double arg = r.dot(r) / spread;
    if (arg > opts.cull_exponent) continue;
    const double T = src.energy / (rcp * std::pow(M_PI * spread, 1.5)) * std::exp(-arg);
    out.value += T;
    out.grad += r * (-T / (2.0 * alpha * dt));
  }
  return out;
}

}  // namespace thermiga
