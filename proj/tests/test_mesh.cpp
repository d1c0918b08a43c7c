#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "thermiga/mesh.hpp"

using namespace thermiga;
using namespace thermiga::testing;

namespace {

double quadrature_volume(const Mesh& mesh) {
  Mesh::QuadData quad;
  double vol = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    mesh.element_quad(e, quad);
    for (int q = 0; q < quad.n_qp; ++q) vol += quad.weight[q];
  }
  return vol;
}

const double kPartVolume = (4.0 - M_PI / 4.0) * 2.0 * 1e-9;  // m^3
const double kLateralArea = (2.0 + 2.0 + 1.0 + 1.0 + M_PI / 2.0) * 2.0 * 1e-6;  // m^2

}  // namespace

TEST_CASE("gauss rules integrate x^(2q-1) exactly on [0,1]") {
  for (int q = 1; q <= 10; ++q) {
    const auto& rule = gauss_rule(q);
    double integral = 0.0;
    for (int i = 0; i < q; ++i) {
      const double x = 0.5 + 0.5 * rule.nodes[i];
      integral += 0.5 * rule.weights[i] * std::pow(x, 2 * q - 1);
    }
    CHECK(integral == doctest::Approx(1.0 / (2.0 * q)).epsilon(1e-13));
  }
}

TEST_CASE("element enumeration") {
  const NurbsVolume vol = quarter_cylinder_part();

  SUBCASE("the printed knot vectors give two elements") {
    const Mesh mesh = build_mesh(vol);
    CHECK(mesh.n_elements() == 2);
    CHECK(mesh.n_functions() == 5 * 2 * 2);
  }

  SUBCASE("dyadic refinement in every direction gives 16") {
    const Mesh mesh = build_mesh(vol.refined({{{0.25, 0.75}, {0.5}, {0.5}}}));
    CHECK(mesh.n_elements() == 16);
  }

  SUBCASE("zero-length interior spans produce no elements") {
    // the double knot at 0.5 is already in the benchmark vector; adding one
    // more would split continuity further but still creates no empty element
    const Mesh mesh = build_mesh(vol);
    for (int e = 0; e < mesh.n_elements(); ++e)
      for (int d = 0; d < 3; ++d)
        CHECK(mesh.element(e).box[d][1] > mesh.element(e).box[d][0]);
  }
}

TEST_CASE("folded geometry is rejected at mesh build") {
  // swap two control points so the map folds over itself
  const NurbsVolume good = quarter_cylinder_part();
  ControlGrid grid = good.grid();
  std::swap(grid.pts[grid.index(0, 0, 0)], grid.pts[grid.index(4, 1, 0)]);
  const NurbsVolume folded({good.knots(0), good.knots(1), good.knots(2)}, std::move(grid));
  CHECK_THROWS_AS(build_mesh(folded), numeric_error);
}

TEST_CASE("degenerate surface points are reported") {
  // collapse the top edge of one face to a single point
  const NurbsVolume good = quarter_cylinder_part();
  ControlGrid grid = good.grid();
  for (int i = 0; i < 5; ++i)
    grid.pts[grid.index(i, 0, 1)] = grid.pts[grid.index(0, 0, 1)];
  const NurbsVolume pinched({good.knots(0), good.knots(1), good.knots(2)}, std::move(grid));
  CHECK_THROWS_AS(pinched.face_point(FaceId::etamin, 0.5, 1.0), numeric_error);
}

TEST_CASE("volume quadrature hits the analytic part volume") {
  const NurbsVolume vol = quarter_cylinder_part();
  const NurbsVolume fine = vol.refined(
      {{uniform_refinement_knots(vol.knots(0), 8), uniform_refinement_knots(vol.knots(1), 4),
        uniform_refinement_knots(vol.knots(2), 4)}});
  const Mesh mesh(fine, {12, 12, 12});
  CHECK(quadrature_volume(mesh) == doctest::Approx(kPartVolume).epsilon(1e-10));
}

TEST_CASE("lateral surface quadrature hits the analytic area") {
  const NurbsVolume vol = quarter_cylinder_part();
  const NurbsVolume fine = vol.refined(
      {{uniform_refinement_knots(vol.knots(0), 8), uniform_refinement_knots(vol.knots(1), 4),
        uniform_refinement_knots(vol.knots(2), 4)}});
  const Mesh mesh(fine, {12, 12, 12});
  const BoundarySets sets = classify_boundary(mesh, BoundaryTags::extruded_default(), 6);

  double area = 0.0;
  for (const auto& face : sets.lateral)
    for (const auto& fe : face.elements)
      for (const auto& qp : fe.qp_fine) area += qp.weight;
  CHECK(area == doctest::Approx(kLateralArea).epsilon(1e-10));
}

TEST_CASE("boundary classification of the extruded benchmark") {
  const Mesh mesh = build_mesh(quarter_cylinder_part());
  const BoundaryTags tags = BoundaryTags::extruded_default();
  const BoundarySets sets = classify_boundary(mesh, tags);

  CHECK(sets.bottom == FaceId::zetamin);
  REQUIRE(sets.top.size() == 1);
  CHECK(sets.top[0] == FaceId::zetamax);
  CHECK(sets.lateral.size() == 4);

  SUBCASE("missing bottom tag is a config error") {
    BoundaryTags bad = tags;
    bad.role[static_cast<int>(FaceId::zetamin)] = FaceRole::lateral;
    CHECK_THROWS_AS(classify_boundary(mesh, bad), config_error);
  }
}

TEST_CASE("dof partition") {
  const NurbsVolume vol = quarter_cylinder_part().refined({{{0.25, 0.75}, {0.5}, {0.5}}});
  const DofMap dofs = make_dof_map(vol, BoundaryTags::extruded_default());
  const auto n = vol.basis_counts();

  CHECK(dofs.n_constrained() == n[0] * n[1]);
  CHECK(dofs.n_free() + dofs.n_constrained() == vol.n_functions());
  // disjoint and exhaustive
  for (int g = 0; g < vol.n_functions(); ++g) {
    const bool free = dofs.free_index[g] >= 0;
    const bool constrained = dofs.constrained_index[g] >= 0;
    CHECK(free != constrained);
  }
}

TEST_CASE("dirichlet values by greville collocation") {
  const Material mat = ti64();
  const LaserSpec laser = benchmark_laser();
  const NurbsVolume vol = quarter_cylinder_part();
  const BoundaryTags tags = BoundaryTags::extruded_default();
  const DofMap dofs = make_dof_map(vol, tags);

  SUBCASE("zero field at t = 0") {
    ScanPath dwell;
    dwell.waypoints = {{1.5e-3, 0.5e-3}};
    dwell.plane_z = 2e-3;
    dwell.start_time = 1e-4;  // activation gap exceeds the tau shift
    const auto sources = discretize_scan(dwell, laser, mat);
    const auto values = dirichlet_values(vol, dofs, tags, sources, mat, 0.0);
    for (double v : values) CHECK(v == 0.0);
  }

  SUBCASE("sources 2 mm away are invisible at early times") {
    ScanPath dwell;
    dwell.waypoints = {{1.5e-3, 0.5e-3}};
    dwell.plane_z = 2e-3;  // the platform sits 2 mm below
    const auto sources = discretize_scan(dwell, laser, mat);
    const auto values = dirichlet_values(vol, dofs, tags, sources, mat, 1.9e-4);
    for (double v : values) CHECK(std::abs(v) < 1e-9);
  }

  SUBCASE("collocation matches -T_tilde at the greville point") {
    const auto g0 = vol.knots(0).greville();
    const auto g1 = vol.knots(1).greville();
    const Vec3 below = vol.map_point({g0[2], g1[1], 0.0}).x;

    ScanPath dwell;
    dwell.waypoints = {{below.x, below.y}};
    dwell.plane_z = below.z + 0.2e-3;
    const auto sources = discretize_scan(dwell, laser, mat);

    const double t = 5e-3;  // late enough to reach 0.2 mm deep
    const auto values = dirichlet_values(vol, dofs, tags, sources, mat, t);
    const double expected = -superpose(sources, mat, below, t).value;
    const int g = vol.grid().index(2, 1, 0);
    CHECK(values[dofs.constrained_index[g]] == doctest::Approx(expected).epsilon(1e-13));
    CHECK(std::abs(expected) > 0.0);
  }
}

TEST_CASE("refinement helpers and mesh stats") {
  const NurbsVolume vol = quarter_cylinder_part();

  SUBCASE("uniform counts preserve existing breakpoints") {
    const auto knots = uniform_refinement_knots(vol.knots(0), 32);
    const auto refined = vol.knots(0).with_knots(knots);
    CHECK(refined.breakpoints().size() == 33);  // 32 elements
  }

  SUBCASE("graded knots form a geometric progression toward the focus") {
    const auto knots = graded_refinement_knots(vol.knots(1), 6, 1.5, 0.0);
    REQUIRE(knots.size() == 5);
    double prev = knots[0];
    double prev_size = knots[0];
    for (std::size_t i = 1; i < knots.size(); ++i) {
      const double size = knots[i] - prev;
      CHECK(size == doctest::Approx(1.5 * prev_size).epsilon(1e-12));
      prev_size = size;
      prev = knots[i];
    }
  }

  SUBCASE("target of 100 um on the arc lands at l_e near 5") {
    const NurbsVolume fine =
        vol.refined({{uniform_refinement_knots(vol.knots(0), 16), {}, {}}});
    const Mesh mesh = build_mesh(fine);
    const DofMap dofs = make_dof_map(fine, BoundaryTags::extruded_default());
    const MeshStats st = mesh_stats(mesh, dofs, FaceId::etamin, 20e-6);
    CHECK(st.l_e == doctest::Approx(5.0).epsilon(0.03));
    CHECK(st.l_min == doctest::Approx(M_PI / 2.0 * 1e-3 / 16.0).epsilon(1e-3));
    CHECK(st.n_dofs == fine.n_functions());
  }
}
