#include "thermiga/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thermiga {

FaceId BoundaryTags::bottom_face() const {
  for (FaceId f : kAllFaces)
    if (role_of(f) == FaceRole::bottom) return f;
  throw config_error("boundary tags: no face tagged bottom");
}

void BoundaryTags::validate() const {
  int n_bottom = 0, n_lateral = 0;
  for (FaceId f : kAllFaces) {
    if (role_of(f) == FaceRole::bottom) ++n_bottom;
    if (role_of(f) == FaceRole::lateral) ++n_lateral;
  }
  if (n_bottom != 1) throw config_error("boundary tags: exactly one face must be bottom");
  if (n_lateral < 1) throw config_error("boundary tags: at least one face must be lateral");
}

BoundaryTags BoundaryTags::extruded_default() {
  BoundaryTags t;
  t.role.fill(FaceRole::lateral);
  t.role[static_cast<int>(FaceId::zetamin)] = FaceRole::bottom;
  t.role[static_cast<int>(FaceId::zetamax)] = FaceRole::top;
  return t;
}

Mesh::Mesh(NurbsVolume vol, std::array<int, 3> quad_points)
    : vol_(std::move(vol)), quad_points_(quad_points) {
  std::array<std::vector<double>, 3> bp;
  for (int d = 0; d < 3; ++d) {
    bp[d] = vol_.knots(d).breakpoints();
    if (quad_points_[d] < 1) throw std::invalid_argument("quadrature needs >= 1 point");
  }
  const auto p = vol_.degrees();
  // one element per Cartesian product of nonzero spans
  for (std::size_t k = 0; k + 1 < bp[2].size(); ++k)
    for (std::size_t j = 0; j + 1 < bp[1].size(); ++j)
      for (std::size_t i = 0; i + 1 < bp[0].size(); ++i) {
        Element el;
        el.box = {{{bp[0][i], bp[0][i + 1]},
                   {bp[1][j], bp[1][j + 1]},
                   {bp[2][k], bp[2][k + 1]}}};
        for (int d = 0; d < 3; ++d) {
          const double mid = 0.5 * (el.box[d][0] + el.box[d][1]);
          el.spans[d] = vol_.knots(d).find_span(mid);
        }
        el.dofs.resize((p[0] + 1) * (p[1] + 1) * (p[2] + 1));
        int a = 0;
        for (int ck = 0; ck <= p[2]; ++ck)
          for (int cj = 0; cj <= p[1]; ++cj)
            for (int ci = 0; ci <= p[0]; ++ci, ++a)
              el.dofs[a] = vol_.grid().index(el.spans[0] - p[0] + ci,
                                             el.spans[1] - p[1] + cj,
                                             el.spans[2] - p[2] + ck);
        elements_.push_back(std::move(el));
      }
}

void Mesh::element_quad(int e, QuadData& out) const {
  const Element& el = elements_[e];
  const auto& g0 = gauss_rule(quad_points_[0]);
  const auto& g1 = gauss_rule(quad_points_[1]);
  const auto& g2 = gauss_rule(quad_points_[2]);

  const int nq = quad_points_[0] * quad_points_[1] * quad_points_[2];
  const int nb = static_cast<int>(el.dofs.size());
  out.n_qp = nq;
  out.n_basis = nb;
  out.weight.resize(nq);
  out.x.resize(nq);
  out.N.resize(static_cast<std::size_t>(nq) * nb);
  out.grad_N.resize(static_cast<std::size_t>(nq) * nb);

  std::array<double, 3> half, mid;
  for (int d = 0; d < 3; ++d) {
    half[d] = 0.5 * (el.box[d][1] - el.box[d][0]);
    mid[d] = 0.5 * (el.box[d][1] + el.box[d][0]);
  }
  const double box_measure = half[0] * half[1] * half[2];

  int q = 0;
  for (int c = 0; c < quad_points_[2]; ++c)
    for (int b = 0; b < quad_points_[1]; ++b)
      for (int a = 0; a < quad_points_[0]; ++a, ++q) {
        const Vec3 xi{mid[0] + half[0] * g0.nodes[a], mid[1] + half[1] * g1.nodes[b],
                      mid[2] + half[2] * g2.nodes[c]};
        const int n = vol_.basis_at(xi, out.scratch, out.idx_buf, out.val_buf, out.grad_buf);
        if (n != nb) throw numeric_error("basis block size mismatch");

        Mat3 jac{};
        Vec3 x{0.0, 0.0, 0.0};
        for (int m = 0; m < nb; ++m) {
          const auto& cp = vol_.grid().pts[out.idx_buf[m]];
          x += out.val_buf[m] * Vec3{cp[0], cp[1], cp[2]};
          for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) jac(r, cc) += cp[r] * out.grad_buf[m][cc];
        }
        const double det = jac.det();
        if (!(det > 0.0))
          throw numeric_error("non-positive Jacobian determinant at quadrature point");
        const Mat3 inv = jac.inverse();

        out.weight[q] = g0.weights[a] * g1.weights[b] * g2.weights[c] * box_measure * det;
        out.x[q] = x;
        for (int m = 0; m < nb; ++m) {
          out.N[static_cast<std::size_t>(q) * nb + m] = out.val_buf[m];
          out.grad_N[static_cast<std::size_t>(q) * nb + m] =
              inv.apply_transposed(out.grad_buf[m]);
        }
      }
}

Mesh build_mesh(NurbsVolume vol, int quad_order) {
  const auto p = vol.degrees();
  std::array<int, 3> qp;
  for (int d = 0; d < 3; ++d) qp[d] = quad_order > 0 ? quad_order : p[d] + 1;
  Mesh mesh(std::move(vol), qp);
  // validate the geometry once: every quadrature point must see detJ > 0
  Mesh::QuadData work;
  for (int e = 0; e < mesh.n_elements(); ++e) mesh.element_quad(e, work);
  return mesh;
}

DofMap make_dof_map(const NurbsVolume& vol, const BoundaryTags& tags) {
  tags.validate();
  const FaceId bottom = tags.bottom_face();
  const int axis = face_axis(bottom);
  const auto n = vol.basis_counts();
  const int layer = face_is_min(bottom) ? 0 : n[axis] - 1;

  DofMap map;
  map.free_index.assign(vol.n_functions(), -1);
  map.constrained_index.assign(vol.n_functions(), -1);
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const std::array<int, 3> ijk{i, j, k};
        const int g = vol.grid().index(i, j, k);
        if (ijk[axis] == layer) {
          map.constrained_index[g] = static_cast<int>(map.constrained_list.size());
          map.constrained_list.push_back(g);
        } else {
          map.free_index[g] = static_cast<int>(map.free_list.size());
          map.free_list.push_back(g);
        }
      }
  return map;
}

namespace {

FaceElement build_face_element(const NurbsVolume& vol, FaceId f,
                               const std::array<std::array<double, 2>, 2>& box,
                               const std::array<int, 2>& spans, int mult) {
  const auto t = face_tangent_axes(f);
  const auto p = vol.degrees();

  FaceElement fe;
  fe.spans = spans;
  fe.box = box;

  BasisScratch scratch;
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<Vec3> grad;

  auto fill_rule = [&](int nq_u, int nq_v, std::vector<FaceQuadPoint>& qps,
                       std::vector<double>& Nmat) {
    const auto& gu = gauss_rule(nq_u);
    const auto& gv = gauss_rule(nq_v);
    const double hu = 0.5 * (box[0][1] - box[0][0]), mu = 0.5 * (box[0][1] + box[0][0]);
    const double hv = 0.5 * (box[1][1] - box[1][0]), mv = 0.5 * (box[1][1] + box[1][0]);
    qps.clear();
    Nmat.clear();
    for (int b = 0; b < nq_v; ++b)
      for (int a = 0; a < nq_u; ++a) {
        const double u = mu + hu * gu.nodes[a];
        const double v = mv + hv * gv.nodes[b];
        const auto sp = vol.face_point(f, u, v);
        const int nb = vol.basis_at(sp.xi, scratch, idx, val, grad);
        if (fe.dofs.empty()) fe.dofs = idx;
        FaceQuadPoint q;
        q.x = sp.x;
        q.normal = sp.normal;
        q.weight = gu.weights[a] * gv.weights[b] * hu * hv * sp.area_scale;
        qps.push_back(q);
        for (int m = 0; m < nb; ++m) Nmat.push_back(val[m]);
      }
  };

  const int base_u = p[t[0]] + 1, base_v = p[t[1]] + 1;
  fill_rule(base_u, base_v, fe.qp_base, fe.N_base);
  fill_rule(mult * base_u, mult * base_v, fe.qp_fine, fe.N_fine);

  const auto mid = vol.face_point(f, 0.5 * (box[0][0] + box[0][1]),
                                  0.5 * (box[1][0] + box[1][1]));
  fe.center = mid.x;
  return fe;
}

}  // namespace

BoundarySets classify_boundary(const Mesh& mesh, const BoundaryTags& tags,
                               int fine_rule_multiplier) {
  tags.validate();
  const NurbsVolume& vol = mesh.volume();
  BoundarySets sets;
  sets.bottom = tags.bottom_face();
  for (FaceId f : kAllFaces) {
    if (tags.role_of(f) == FaceRole::top) sets.top.push_back(f);
    if (tags.role_of(f) != FaceRole::lateral) continue;
    LateralFace lf;
    lf.face = f;
    const auto t = face_tangent_axes(f);
    const auto bp_u = vol.knots(t[0]).breakpoints();
    const auto bp_v = vol.knots(t[1]).breakpoints();
    for (std::size_t jv = 0; jv + 1 < bp_v.size(); ++jv)
      for (std::size_t iu = 0; iu + 1 < bp_u.size(); ++iu) {
        const std::array<std::array<double, 2>, 2> box{
            {{bp_u[iu], bp_u[iu + 1]}, {bp_v[jv], bp_v[jv + 1]}}};
        const std::array<int, 2> spans{
            vol.knots(t[0]).find_span(0.5 * (box[0][0] + box[0][1])),
            vol.knots(t[1]).find_span(0.5 * (box[1][0] + box[1][1]))};
        lf.elements.push_back(
            build_face_element(vol, f, box, spans, std::max(1, fine_rule_multiplier)));
      }
    sets.lateral.push_back(std::move(lf));
  }
  return sets;
}

std::vector<double> dirichlet_values(const NurbsVolume& vol, const DofMap& dofs,
                                     const BoundaryTags& tags,
                                     const std::vector<PointSource>& sources,
                                     const Material& mat, double t,
                                     const SuperposeOptions& opts) {
  const FaceId bottom = tags.bottom_face();
  const int axis = face_axis(bottom);
  const auto tang = face_tangent_axes(bottom);
  const auto g0 = vol.knots(tang[0]).greville();
  const auto g1 = vol.knots(tang[1]).greville();
  const auto n = vol.basis_counts();

  std::vector<double> values(dofs.n_constrained());
  for (int c = 0; c < dofs.n_constrained(); ++c) {
    const int g = dofs.constrained_list[c];
    // decompose the flat index into (i,j,k)
    const int i = g % n[0];
    const int j = (g / n[0]) % n[1];
    const int k = g / (n[0] * n[1]);
    const std::array<int, 3> ijk{i, j, k};
    const Vec3 xi = face_param(bottom, g0[ijk[tang[0]]], g1[ijk[tang[1]]]);
    (void)axis;
    const Vec3 x = vol.map_point(xi).x;
    values[c] = -superpose(sources, mat, x, t, opts).value;
  }
  return values;
}

namespace {

double edge_length(const NurbsVolume& vol, FaceId f, double u0, double u1, double v) {
  const auto& g = gauss_rule(5);
  const double h = 0.5 * (u1 - u0), m = 0.5 * (u1 + u0);
  const auto t = face_tangent_axes(f);
  double len = 0.0;
  for (std::size_t a = 0; a < g.nodes.size(); ++a) {
    const Vec3 xi = face_param(f, m + h * g.nodes[a], v);
    const auto pm = vol.map_point(xi);
    const Vec3 du{pm.jac(0, t[0]), pm.jac(1, t[0]), pm.jac(2, t[0])};
    len += g.weights[a] * h * du.norm();
  }
  return len;
}

}  // namespace

MeshStats mesh_stats(const Mesh& mesh, const DofMap& dofs, FaceId profile_face,
                     double spot_radius, double edge_v) {
  const NurbsVolume& vol = mesh.volume();
  const auto t = face_tangent_axes(profile_face);
  const auto bp = vol.knots(t[0]).breakpoints();
  MeshStats st;
  st.l_min = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i + 1 < bp.size(); ++i)
    st.l_min = std::min(st.l_min, edge_length(vol, profile_face, bp[i], bp[i + 1], edge_v));
  st.l_e = st.l_min / spot_radius;
  st.n_dofs = dofs.n_free() + dofs.n_constrained();
  st.n_elements = mesh.n_elements();
  return st;
}

std::vector<double> uniform_refinement_knots(const KnotVector& kv, int target_elements) {
  return graded_refinement_knots(kv, target_elements, 1.0, 0.0);
}

std::vector<double> graded_refinement_knots(const KnotVector& kv, int target_elements,
                                            double ratio, double focus) {
  if (target_elements < 1) throw std::invalid_argument("refinement: need >= 1 element");
  if (!(ratio >= 1.0)) throw std::invalid_argument("refinement: grading ratio must be >= 1");
  const auto bp = kv.breakpoints();
  const double total = bp.back() - bp.front();
  std::vector<double> knots;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double len = bp[s + 1] - bp[s];
    const int n = std::max(1, static_cast<int>(std::lround(target_elements * len / total)));
    if (n == 1) continue;
    // geometric sizes h, h r, h r^2, ...; smallest block sits at the focus end
    std::vector<double> sizes(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::pow(ratio, i);
    for (int i = 0; i < n; ++i) sizes[i] = len * std::pow(ratio, i) / sum;
    if (focus > 0.5) std::reverse(sizes.begin(), sizes.end());
    double pos = bp[s];
    for (int i = 0; i + 1 < n; ++i) {
      pos += sizes[i];
      knots.push_back(pos);
    }
  }
  return knots;
}

}  // namespace thermiga
