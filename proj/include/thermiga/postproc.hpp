#pragma once

#include <optional>
#include <string>

#include "thermiga/mesh.hpp"
#include "thermiga/timestep.hpp"

namespace thermiga {

/// Reconstructed temperature T_c + T_tilde + T_hat at a parametric probe.
double total_temperature(const NurbsVolume& vol, std::span<const double> full_coeffs,
                         const std::vector<PointSource>& sources, const Material& mat,
                         const Vec3& xi, double t, const SuperposeOptions& opts = {});

/// Heat loss rate samples along a boundary curve.
struct FluxProfile {
  struct Sample {
    double s;         // arc length, m
    double theta;     // angular coordinate, rad (NaN when no axis configured)
    double q_tilde;   // -k dT_tilde/dn, W/m^2
    double q_hat;     // -k dT_hat/dn, W/m^2
    double q_net;     // q_tilde + q_hat
  };
  std::vector<Sample> samples;
};

/// Sample the net heat loss rate along the v=edge_v edge of a lateral face,
/// uniformly in the face parameter. theta_axis, when given, is the (x1,x2)
/// position of the cylinder axis used for the angular coordinate, measured
/// from the +x2 direction.
FluxProfile boundary_flux_profile(const NurbsVolume& vol, std::span<const double> full_coeffs,
                                  const std::vector<PointSource>& sources, const Material& mat,
                                  FaceId face, int n_samples, double t,
                                  std::optional<std::array<double, 2>> theta_axis = {},
                                  double edge_v = 1.0, const SuperposeOptions& opts = {});

struct FluxMetrics {
  double integral_net = 0.0;       // W/m
  double integral_analytic = 0.0;  // W/m
  std::optional<double> ratio;     // absent when the analytic integral is zero
};

/// Composite-trapezoid integrals of |q_net| and |q_tilde| over arc length.
FluxMetrics integrated_abs_flux(const FluxProfile& profile);

/// e_r = |value - reference| / reference; the reference must be nonzero.
double relative_error(double value, double reference);

/// Legacy ASCII VTK structured-grid export of T_total / T_tilde / T_hat on a
/// parametric sampling grid mapped through the geometry.
void export_field(const NurbsVolume& vol, std::span<const double> full_coeffs,
                  const std::vector<PointSource>& sources, const Material& mat,
                  std::array<int, 3> grid_dims, double t, const std::string& path,
                  const SuperposeOptions& opts = {});

/// CSV with header s_m,theta_rad,q_tilde_W_m2,q_hat_W_m2,q_net_W_m2.
void export_profile_csv(const FluxProfile& profile, const std::string& path);

}  // namespace thermiga
