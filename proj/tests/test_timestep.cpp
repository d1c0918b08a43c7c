#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "thermiga/timestep.hpp"

using namespace thermiga;
using namespace thermiga::testing;

namespace {

CsrMatrix scalar_matrix(double v) {
  CsrMatrix m;
  m.rows = m.cols = 1;
  m.row_ptr = {0, 1};
  m.col_idx = {0};
  m.vals = {v};
  return m;
}

DofMap all_free(int n) {
  DofMap d;
  d.free_index.resize(n);
  d.constrained_index.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    d.free_index[i] = i;
    d.free_list.push_back(i);
  }
  return d;
}

struct BenchmarkFixture {
  Mesh mesh;
  DofMap dofs;
  BoundarySets boundary;
  SystemMatrices sys;

  BenchmarkFixture()
      : mesh(build_mesh(quarter_cylinder_part().refined(
            {{uniform_refinement_knots(quarter_cylinder_part().knots(0), 8),
              uniform_refinement_knots(quarter_cylinder_part().knots(1), 4),
              uniform_refinement_knots(quarter_cylinder_part().knots(2), 4)}}))),
        dofs(make_dof_map(mesh.volume(), BoundaryTags::extruded_default())),
        boundary(classify_boundary(mesh, BoundaryTags::extruded_default())),
        sys(assemble_system(mesh, ti64())) {}
};

}  // namespace

TEST_CASE("scalar surrogate reproduces the amplification factor") {
  // M = 1, K = lambda: one theta step multiplies by
  // (1 - (1-theta) lambda dt) / (1 + theta lambda dt)
  const double lambda = 1.0, dt = 1.0;
  const SystemMatrices sys{scalar_matrix(1.0), scalar_matrix(lambda)};
  const DofMap dofs = all_free(1);

  auto amplify = [&](double theta) {
    const DirichletSystem dsys(sys, dofs, theta, dt);
    State s0;
    s0.free_coeffs = {1.0};
    const std::vector<double> zero{0.0};
    const State s1 = theta_step(dsys, s0, zero, zero, {}, {1e-14, 100});
    return s1.free_coeffs[0];
  };

  CHECK(amplify(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(amplify(0.5) == doctest::Approx((1.0 - 0.5) / (1.0 + 0.5)).epsilon(1e-12));
  CHECK(amplify(0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("constant state is preserved exactly") {
  const BenchmarkFixture fx;
  const double c = 7.25;
  const DirichletSystem dsys(fx.sys, fx.dofs, 0.5, 1e-5);

  State state;
  state.free_coeffs.assign(fx.dofs.n_free(), c);
  state.constrained_values.assign(fx.dofs.n_constrained(), c);
  const std::vector<double> zero_load(fx.mesh.n_functions(), 0.0);
  const std::vector<double> g(fx.dofs.n_constrained(), c);

  for (int n = 0; n < 5; ++n) state = theta_step(dsys, state, zero_load, zero_load, g, {});
  for (double v : state.free_coeffs) CHECK(v == doctest::Approx(c).epsilon(1e-10));
  CHECK(state.step == 5);
  CHECK(state.time == doctest::Approx(5e-5));
}

TEST_CASE("crank-nicolson is stable for arbitrarily large steps") {
  const BenchmarkFixture fx;
  const double dt = 1e3;  // vastly beyond any diffusive time scale
  const DirichletSystem dsys(fx.sys, fx.dofs, 0.5, dt);

  State state;
  state.free_coeffs.resize(fx.dofs.n_free());
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (auto& v : state.free_coeffs) v = uni(rng);
  state.constrained_values.assign(fx.dofs.n_constrained(), 0.0);

  const std::vector<double> zero_load(fx.mesh.n_functions(), 0.0);
  const std::vector<double> g(fx.dofs.n_constrained(), 0.0);

  auto m_norm = [&](const State& s) {
    std::vector<double> full, y(fx.mesh.n_functions());
    dsys.expand(s.free_coeffs, s.constrained_values, full);
    fx.sys.mass.multiply(full, y);
    double e = 0.0;
    for (int i = 0; i < fx.mesh.n_functions(); ++i) e += full[i] * y[i];
    return std::sqrt(e);
  };

  double prev = m_norm(state);
  for (int n = 0; n < 8; ++n) {
    state = theta_step(dsys, state, zero_load, zero_load, g, {1e-12, 5000});
    const double now = m_norm(state);
    CHECK(now <= prev * (1.0 + 1e-10));
    prev = now;
  }
}

TEST_CASE("matching step and source spacing activates one source per step") {
  const Material mat = ti64();
  const LaserSpec laser = benchmark_laser();
  ScanPath path;
  path.waypoints = {{0.9e-3, 0.0}, {0.9e-3, 1.0e-3}};
  const auto sources = discretize_scan(path, laser, mat);

  const double dt = laser.dt;
  const int n_steps = 15;
  REQUIRE(static_cast<int>(sources.size()) > n_steps);
  int prev_active = 0;
  for (int n = 0; n <= n_steps; ++n) {
    const double t = n * dt;
    int active = 0;
    for (const auto& s : sources)
      if (s.t_activate <= t) ++active;
    if (n > 0) CHECK(active - prev_active == 1);
    prev_active = active;
  }
}

TEST_CASE("discrete energy balance over the benchmark pulse") {
  const BenchmarkFixture fx;
  const Material mat = ti64();
  const LaserSpec laser = benchmark_laser();
  const BoundaryTags tags = BoundaryTags::extruded_default();

  ScanPath dwell;
  dwell.waypoints = {{pulse_position().x, pulse_position().y}};
  dwell.plane_z = pulse_position().z;
  const auto sources = discretize_scan(dwell, laser, mat);

  const double dt = 1e-5, theta = 0.5;
  const DirichletSystem dsys(fx.sys, fx.dofs, theta, dt);
  const int n = fx.mesh.n_functions();

  State state;
  state.free_coeffs.assign(fx.dofs.n_free(), 0.0);
  state.constrained_values =
      dirichlet_values(fx.mesh.volume(), fx.dofs, tags, sources, mat, 0.0);

  std::vector<double> load_n(n), load_np1(n);
  assemble_flux_load(fx.boundary, sources, mat, 0.0, 5e-4, load_n);

  std::vector<double> full_prev, full_now;
  dsys.expand(state.free_coeffs, state.constrained_values, full_prev);

  for (int s = 1; s <= 19; ++s) {
    const double t1 = s * dt;
    assemble_flux_load(fx.boundary, sources, mat, t1, 5e-4, load_np1);
    const auto g1 = dirichlet_values(fx.mesh.volume(), fx.dofs, tags, sources, mat, t1);
    state = theta_step(dsys, state, load_n, load_np1, g1, {1e-12, 5000});
    dsys.expand(state.free_coeffs, state.constrained_values, full_now);

    // residual of the full semi-discrete theta step; free rows vanish up to
    // the solver tolerance, constrained rows carry the platform flux
    std::vector<double> mdot(n), ktheta(n), t_theta(n), f_theta(n), dT(n);
    for (int i = 0; i < n; ++i) {
      t_theta[i] = theta * full_now[i] + (1.0 - theta) * full_prev[i];
      f_theta[i] = theta * load_np1[i] + (1.0 - theta) * load_n[i];
      dT[i] = (full_now[i] - full_prev[i]) / dt;
    }
    fx.sys.mass.multiply(dT, mdot);
    fx.sys.stiffness.multiply(t_theta, ktheta);

    double free_residual = 0.0, input = 0.0;
    for (int i = 0; i < n; ++i) {
      if (fx.dofs.free_index[i] >= 0) free_residual += mdot[i] + ktheta[i] - f_theta[i];
      input += f_theta[i];
    }
    REQUIRE(input > 0.0);
    CHECK(std::abs(free_residual) < 0.005 * input);

    std::swap(load_n, load_np1);
    std::swap(full_prev, full_now);
  }
}
