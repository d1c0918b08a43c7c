#include "thermiga/postproc.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace thermiga {

double total_temperature(const NurbsVolume& vol, std::span<const double> full_coeffs,
                         const std::vector<PointSource>& sources, const Material& mat,
                         const Vec3& xi, double t, const SuperposeOptions& opts) {
  for (int d = 0; d < 3; ++d)
    if (xi[d] < 0.0 || xi[d] > 1.0)
      throw std::domain_error("probe parametric coordinates outside the patch");
  const Vec3 x = vol.map_point(xi).x;
  const double t_tilde = superpose(sources, mat, x, t, opts).value;
  const double t_hat = vol.field_at(full_coeffs, xi).value;
  return mat.platform_temperature + t_tilde + t_hat;
}

FluxProfile boundary_flux_profile(const NurbsVolume& vol, std::span<const double> full_coeffs,
                                  const std::vector<PointSource>& sources, const Material& mat,
                                  FaceId face, int n_samples, double t,
                                  std::optional<std::array<double, 2>> theta_axis,
                                  double edge_v, const SuperposeOptions& opts) {
  if (n_samples < 2) throw std::invalid_argument("flux profile needs >= 2 samples");
  const double k = mat.conductivity;
  const auto tang = face_tangent_axes(face);

  FluxProfile profile;
  profile.samples.resize(n_samples);

  // arc length accumulated with a per-interval Gauss rule on the edge
  // tangent; intervals are split at breakpoints where the speed may kink
  const auto& quad = gauss_rule(4);
  const auto breaks = vol.knots(tang[0]).breakpoints();
  auto segment_length = [&](double a, double b) {
    std::vector<double> cuts{a};
    for (double bp : breaks)
      if (bp > a && bp < b) cuts.push_back(bp);
    cuts.push_back(b);
    double len = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double h = 0.5 * (cuts[c + 1] - cuts[c]), m = 0.5 * (cuts[c + 1] + cuts[c]);
      for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
        const auto pm = vol.map_point(face_param(face, m + h * quad.nodes[q], edge_v));
        const Vec3 du{pm.jac(0, tang[0]), pm.jac(1, tang[0]), pm.jac(2, tang[0])};
        len += quad.weights[q] * h * du.norm();
      }
    }
    return len;
  };

  double s = 0.0;
  double u_prev = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double u = static_cast<double>(i) / (n_samples - 1);
    if (i > 0) s += segment_length(u_prev, u);
    u_prev = u;

    const auto sp = vol.face_point(face, u, edge_v);
    const auto analytic = superpose(sources, mat, sp.x, t, opts);
    const auto hat = vol.field_at(full_coeffs, sp.xi);

    auto& smp = profile.samples[i];
    smp.s = s;
    smp.q_tilde = -k * analytic.grad.dot(sp.normal);
    smp.q_hat = -k * hat.grad.dot(sp.normal);
    smp.q_net = smp.q_tilde + smp.q_hat;
    if (theta_axis) {
      const double dx = sp.x.x - (*theta_axis)[0];
      const double dy = sp.x.y - (*theta_axis)[1];
      smp.theta = std::atan2(-dx, dy);  // measured from the +x2 direction
    } else {
      smp.theta = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return profile;
}

FluxMetrics integrated_abs_flux(const FluxProfile& profile) {
  if (profile.samples.size() < 2)
    throw std::invalid_argument("flux metrics need >= 2 samples");
  FluxMetrics m;
  for (std::size_t i = 1; i < profile.samples.size(); ++i) {
    const auto& a = profile.samples[i - 1];
    const auto& b = profile.samples[i];
    const double ds = b.s - a.s;
    m.integral_net += 0.5 * ds * (std::abs(a.q_net) + std::abs(b.q_net));
    m.integral_analytic += 0.5 * ds * (std::abs(a.q_tilde) + std::abs(b.q_tilde));
  }
  if (m.integral_analytic > 0.0) m.ratio = m.integral_net / m.integral_analytic;
  return m;
}

double relative_error(double value, double reference) {
  if (reference == 0.0) throw std::invalid_argument("relative error: zero reference");
  return std::abs(value - reference) / std::abs(reference);
}

void export_field(const NurbsVolume& vol, std::span<const double> full_coeffs,
                  const std::vector<PointSource>& sources, const Material& mat,
                  std::array<int, 3> grid_dims, double t, const std::string& path,
                  const SuperposeOptions& opts) {
  for (int d = 0; d < 3; ++d)
    if (grid_dims[d] < 2) throw std::invalid_argument("field grid needs >= 2 per direction");

  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);

  const int n = grid_dims[0] * grid_dims[1] * grid_dims[2];
  std::vector<Vec3> points(n);
  std::vector<double> t_tilde(n), t_hat(n);

  int idx = 0;
  for (int k = 0; k < grid_dims[2]; ++k)
    for (int j = 0; j < grid_dims[1]; ++j)
      for (int i = 0; i < grid_dims[0]; ++i, ++idx) {
        const Vec3 xi{static_cast<double>(i) / (grid_dims[0] - 1),
                      static_cast<double>(j) / (grid_dims[1] - 1),
                      static_cast<double>(k) / (grid_dims[2] - 1)};
        points[idx] = vol.map_point(xi).x;
        t_tilde[idx] = superpose(sources, mat, points[idx], t, opts).value;
        t_hat[idx] = vol.field_at(full_coeffs, xi).value;
      }

  out << "# vtk DataFile Version 3.0\n";
  out << "thermiga temperature field at t=" << fmt_full(t) << " s\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << grid_dims[0] << " " << grid_dims[1] << " " << grid_dims[2] << "\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : points)
    out << fmt_full(p.x) << " " << fmt_full(p.y) << " " << fmt_full(p.z) << "\n";
  out << "POINT_DATA " << n << "\n";

  auto write_scalars = [&](const char* name, auto&& value_at) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int m = 0; m < n; ++m) out << fmt_full(value_at(m)) << "\n";
  };
  const double tc = mat.platform_temperature;
  write_scalars("T_total", [&](int m) { return tc + t_tilde[m] + t_hat[m]; });
  write_scalars("T_tilde", [&](int m) { return t_tilde[m]; });
  write_scalars("T_hat", [&](int m) { return t_hat[m]; });
  if (!out) throw io_error("write failure on " + path);
}

void export_profile_csv(const FluxProfile& profile, const std::string& path) {
  if (profile.samples.empty())
    throw std::invalid_argument("refusing to write an empty flux profile");
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  out << "s_m,theta_rad,q_tilde_W_m2,q_hat_W_m2,q_net_W_m2\n";
  for (const auto& s : profile.samples)
    out << fmt_full(s.s) << "," << fmt_full(s.theta) << "," << fmt_full(s.q_tilde) << ","
        << fmt_full(s.q_hat) << "," << fmt_full(s.q_net) << "\n";
  if (!out) throw io_error("write failure on " + path);
}

}  // namespace thermiga
