#pragma once

// Manufactured-solution fixture shared by the unit suite and the acceptance
// runner. The mode
//
//   u*(x,t) = cos(pi x / 2L) cos(pi y / L) sin(pi z / 2L) e^{-lambda t}
//
// vanishes on the bottom face, is adiabatic on four faces, drives a Neumann
// load on ximax and needs a volumetric source; all data come from the
// closed form.

#include <cmath>

#include "test_util.hpp"
#include "thermiga/driver.hpp"
#include "thermiga/timestep.hpp"

namespace thermiga::testing {

struct MmsProblem {
  double edge = 1e-3;     // m
  double lambda = 100.0;  // 1/s
  Material mat = ti64();

  double shape(const Vec3& x) const {
    const double L = edge;
    return std::cos(M_PI * x.x / (2 * L)) * std::cos(M_PI * x.y / L) *
           std::sin(M_PI * x.z / (2 * L));
  }
  double exact(const Vec3& x, double t) const { return shape(x) * std::exp(-lambda * t); }
  /// f = rho c_p du/dt - k lap(u) for the exact solution, at t = 0.
  double source_shape(const Vec3& x) const {
    const double L = edge;
    const double lap_coef = -1.5 * M_PI * M_PI / (L * L);
    return (-mat.volumetric_capacity() * lambda - mat.conductivity * lap_coef) * shape(x);
  }
  /// k grad(u) . n on the boundary, at t = 0.
  double flux_shape(const Vec3& x, const Vec3& n) const {
    const double L = edge;
    const Vec3 grad{
        -M_PI / (2 * L) * std::sin(M_PI * x.x / (2 * L)) * std::cos(M_PI * x.y / L) *
            std::sin(M_PI * x.z / (2 * L)),
        -M_PI / L * std::cos(M_PI * x.x / (2 * L)) * std::sin(M_PI * x.y / L) *
            std::sin(M_PI * x.z / (2 * L)),
        M_PI / (2 * L) * std::cos(M_PI * x.x / (2 * L)) * std::cos(M_PI * x.y / L) *
            std::cos(M_PI * x.z / (2 * L))};
    return mat.conductivity * grad.dot(n);
  }
};

struct MmsRun {
  double l2_error;                  // against the exact solution at t_end
  std::vector<double> free_coeffs;  // final state
  int n_free;
};

MmsRun run_mms(const MmsProblem& prob, int n_elems, double dt, double t_end) {
  const NurbsVolume cube = unit_cube(prob.edge, {2, 2, 2});
  const NurbsVolume fine = cube.refined({{uniform_refinement_knots(cube.knots(0), n_elems),
                                          uniform_refinement_knots(cube.knots(1), n_elems),
                                          uniform_refinement_knots(cube.knots(2), n_elems)}});
  const Mesh mesh = build_mesh(fine);
  const BoundaryTags tags = BoundaryTags::extruded_default();
  const DofMap dofs = make_dof_map(fine, tags);
  const BoundarySets boundary = classify_boundary(mesh, tags);
  const SystemMatrices sys = assemble_system(mesh, prob.mat);
  const int n = mesh.n_functions();

  // time-separable loads: F(t) = e^{-lambda t} (volume + boundary shape)
  std::vector<double> f_shape(n, 0.0);
  assemble_volume_load(mesh, [&](const Vec3& x) { return prob.source_shape(x); }, f_shape);
  std::vector<double> f_surf(n, 0.0);
  assemble_boundary_load(
      boundary, [&](const Vec3& x, const Vec3& nrm) { return prob.flux_shape(x, nrm); },
      std::nullopt, 0.0, f_surf);
  for (int i = 0; i < n; ++i) f_shape[i] += f_surf[i];

  // initial condition: L2 projection of u*(.,0) onto the free DOFs, with the
  // same rho c_p weight the mass matrix carries
  const DirichletSystem mass_only(sys, dofs, 0.0, 1.0);  // reduced operator = M_ff
  std::vector<double> b(n, 0.0);
  assemble_volume_load(
      mesh,
      [&](const Vec3& x) { return prob.mat.volumetric_capacity() * prob.exact(x, 0.0); }, b);
  std::vector<double> b_f(dofs.n_free());
  for (int f = 0; f < dofs.n_free(); ++f) b_f[f] = b[dofs.free_list[f]];

  State state;
  state.free_coeffs.assign(dofs.n_free(), 0.0);
  pcg_jacobi(mass_only.reduced_operator(), b_f, state.free_coeffs, {1e-12, 2000});
  state.constrained_values.assign(dofs.n_constrained(), 0.0);

  const DirichletSystem dsys(sys, dofs, 0.5, dt);
  const std::vector<double> g(dofs.n_constrained(), 0.0);
  const int n_steps = static_cast<int>(std::lround(t_end / dt));
  std::vector<double> load_n(n), load_np1(n);

  for (int i = 0; i < n; ++i) load_n[i] = f_shape[i];
  for (int s = 1; s <= n_steps; ++s) {
    const double decay = std::exp(-prob.lambda * s * dt);
    for (int i = 0; i < n; ++i) load_np1[i] = f_shape[i] * decay;
    state = theta_step(dsys, state, load_n, load_np1, g, {1e-12, 4000});
    std::swap(load_n, load_np1);
  }

  // L2 error with an elevated rule on the same patch
  std::vector<double> full;
  dsys.expand(state.free_coeffs, state.constrained_values, full);
  const Mesh error_mesh(fine, {5, 5, 5});
  Mesh::QuadData quad;
  double err2 = 0.0;
  for (int e = 0; e < error_mesh.n_elements(); ++e) {
    error_mesh.element_quad(e, quad);
    const auto& el_dofs = error_mesh.element(e).dofs;
    for (int q = 0; q < quad.n_qp; ++q) {
      double uh = 0.0;
      for (int m = 0; m < quad.n_basis; ++m)
        uh += quad.N[static_cast<std::size_t>(q) * quad.n_basis + m] * full[el_dofs[m]];
      const double diff = uh - prob.exact(quad.x[q], t_end);
      err2 += quad.weight[q] * diff * diff;
    }
  }
  return {std::sqrt(err2), state.free_coeffs, dofs.n_free()};
}

}  // namespace thermiga::testing
