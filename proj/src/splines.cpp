#include "thermiga/splines.hpp"

#include <algorithm>
#include <cmath>

namespace thermiga {

KnotVector::KnotVector(std::vector<double> values, int degree)
    : values_(std::move(values)), degree_(degree) {
  if (degree_ < 0) throw std::invalid_argument("knot vector: negative degree");
  const int len = static_cast<int>(values_.size());
  if (len < 2 * (degree_ + 1))
    throw std::invalid_argument("knot vector: too few knots for degree");
  for (int i = 1; i < len; ++i)
    if (values_[i] < values_[i - 1])
      throw std::invalid_argument("knot vector: values must be non-decreasing");
  // open (clamped): first and last knots repeated exactly degree+1 times
  for (int i = 1; i <= degree_; ++i)
    if (values_[i] != values_[0] || values_[len - 1 - i] != values_[len - 1])
      throw std::invalid_argument("knot vector: not clamped to multiplicity degree+1");
  if (values_[degree_ + 1] == values_[0] || values_[len - 2 - degree_] == values_[len - 1])
    throw std::invalid_argument("knot vector: end knot multiplicity exceeds degree+1");
  if (!(max_knot() > min_knot()))
    throw std::invalid_argument("knot vector: empty parametric range");
}

int KnotVector::find_span(double u) const {
  const int n = basis_count();
  const int p = degree_;
  const double lo = values_[p], hi = values_[n];
  const double snap = 1e-12 * (hi - lo);
  if (u < lo - snap || u > hi + snap)
    throw std::domain_error("parameter outside knot range");
  u = std::clamp(u, lo, hi);
  if (u >= hi) return n - 1;  // last nonzero span
  if (u <= lo) return p;
  int low = p, high = n, mid = (low + high) / 2;
  while (u < values_[mid] || u >= values_[mid + 1]) {
    if (u < values_[mid])
      high = mid;
    else
      low = mid;
    mid = (low + high) / 2;
  }
  return mid;
}

void KnotVector::basis_ders(double u, int span, int max_deriv, double* out) const {
  const int p = degree_;
  const int cols = p + 1;
  const int rows = max_deriv + 1;
  std::fill(out, out + rows * cols, 0.0);

  // Cox-de Boor triangle with the knot differences kept for the
  // derivative recurrence.
  std::vector<double> ndu((p + 1) * (p + 1));
  std::vector<double> left(p + 1), right(p + 1);
  auto NDU = [&](int i, int j) -> double& { return ndu[i * (p + 1) + j]; };

  NDU(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - values_[span + 1 - j];
    right[j] = values_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      NDU(j, r) = right[r + 1] + left[j - r];
      const double temp = NDU(r, j - 1) / NDU(j, r);
      NDU(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    NDU(j, j) = saved;
  }
  for (int j = 0; j <= p; ++j) out[j] = NDU(j, p);
  if (max_deriv == 0 || p == 0) return;

  const int nd = std::min(max_deriv, p);
  std::vector<double> a(2 * (p + 1));
  auto A = [&](int i, int j) -> double& { return a[i * (p + 1) + j]; };

  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
        d = A(s2, 0) * NDU(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
        d += A(s2, j) * NDU(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, k) = -A(s1, k - 1) / NDU(pk + 1, r);
        d += A(s2, k) * NDU(r, pk);
      }
      out[k * cols + r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out[k * cols + j] *= factor;
    factor *= (p - k);
  }
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> bp;
  const int n = basis_count();
  bp.push_back(values_[degree_]);
  for (int i = degree_; i < n; ++i)
    if (values_[i + 1] > values_[i]) bp.push_back(values_[i + 1]);
  return bp;
}

std::vector<double> KnotVector::greville() const {
  std::vector<double> g(basis_count());
  for (int i = 0; i < basis_count(); ++i) {
    double s = 0.0;
    for (int j = 1; j <= degree_; ++j) s += values_[i + j];
    g[i] = (degree_ > 0) ? s / degree_ : values_[i];
  }
  return g;
}

KnotVector KnotVector::normalized() const {
  const double a = min_knot(), b = max_knot();
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) v[i] = (values_[i] - a) / (b - a);
  // exact endpoints despite rounding
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == a) v[i] = 0.0;
    if (values_[i] == b) v[i] = 1.0;
  }
  return KnotVector(std::move(v), degree_);
}

KnotVector KnotVector::with_knots(const std::vector<double>& extra) const {
  std::vector<double> merged = values_;
  for (double u : extra) {
    if (!(u > min_knot() && u < max_knot()))
      throw std::invalid_argument("inserted knot outside open range");
    merged.insert(std::upper_bound(merged.begin(), merged.end(), u), u);
  }
  return KnotVector(std::move(merged), degree_);
}

const char* face_name(FaceId f) {
  switch (f) {
    case FaceId::ximin: return "ximin";
    case FaceId::ximax: return "ximax";
    case FaceId::etamin: return "etamin";
    case FaceId::etamax: return "etamax";
    case FaceId::zetamin: return "zetamin";
    case FaceId::zetamax: return "zetamax";
  }
  return "?";
}

FaceId face_from_name(const std::string& name) {
  for (FaceId f : kAllFaces)
    if (name == face_name(f)) return f;
  throw std::invalid_argument("unknown face name: " + name);
}

int face_axis(FaceId f) { return static_cast<int>(f) / 2; }

bool face_is_min(FaceId f) { return static_cast<int>(f) % 2 == 0; }

std::array<int, 2> face_tangent_axes(FaceId f) {
  switch (face_axis(f)) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

Vec3 face_param(FaceId f, double u, double v) {
  Vec3 xi;
  const auto t = face_tangent_axes(f);
  xi[face_axis(f)] = face_is_min(f) ? 0.0 : 1.0;
  xi[t[0]] = u;
  xi[t[1]] = v;
  return xi;
}

NurbsVolume::NurbsVolume(std::array<KnotVector, 3> kvs, ControlGrid grid)
    : kvs_{kvs[0].normalized(), kvs[1].normalized(), kvs[2].normalized()},
      grid_(std::move(grid)) {
  for (int d = 0; d < 3; ++d)
    if (grid_.dims[d] != kvs_[d].basis_count())
      throw std::invalid_argument("control grid dimension mismatch in direction " +
                                  std::to_string(d));
  if (static_cast<int>(grid_.pts.size()) != grid_.count())
    throw std::invalid_argument("control grid point count mismatch");
  for (const auto& p : grid_.pts)
    if (!(p[3] > 0.0)) throw std::invalid_argument("control point weights must be positive");
}

std::array<int, 3> NurbsVolume::degrees() const {
  return {kvs_[0].degree(), kvs_[1].degree(), kvs_[2].degree()};
}

std::array<int, 3> NurbsVolume::basis_counts() const {
  return {kvs_[0].basis_count(), kvs_[1].basis_count(), kvs_[2].basis_count()};
}

int NurbsVolume::basis_at(const Vec3& xi, BasisScratch& scratch, std::vector<int>& indices,
                          std::vector<double>& values, std::vector<Vec3>& grads_param) const {
  std::array<int, 3> span, p;
  for (int d = 0; d < 3; ++d) {
    p[d] = kvs_[d].degree();
    span[d] = kvs_[d].find_span(xi[d]);
    scratch.ders[d].resize(2 * (p[d] + 1));
    kvs_[d].basis_ders(xi[d], span[d], 1, scratch.ders[d].data());
  }
  const int nb = (p[0] + 1) * (p[1] + 1) * (p[2] + 1);
  indices.resize(nb);
  values.resize(nb);
  grads_param.resize(nb);

  // tensor B-spline values weighted by the control weights; the rational
  // correction follows from the weight sums
  double W = 0.0;
  Vec3 Wd{0.0, 0.0, 0.0};
  int a = 0;
  for (int k = 0; k <= p[2]; ++k) {
    const double n3 = scratch.ders[2][k], d3 = scratch.ders[2][(p[2] + 1) + k];
    const int gk = span[2] - p[2] + k;
    for (int j = 0; j <= p[1]; ++j) {
      const double n2 = scratch.ders[1][j], d2 = scratch.ders[1][(p[1] + 1) + j];
      const int gj = span[1] - p[1] + j;
      for (int i = 0; i <= p[0]; ++i, ++a) {
        const double n1 = scratch.ders[0][i], d1 = scratch.ders[0][(p[0] + 1) + i];
        const int gi = span[0] - p[0] + i;
        const int g = grid_.index(gi, gj, gk);
        const double w = grid_.pts[g][3];
        indices[a] = g;
        values[a] = w * n1 * n2 * n3;
        grads_param[a] = {w * d1 * n2 * n3, w * n1 * d2 * n3, w * n1 * n2 * d3};
        W += values[a];
        Wd += grads_param[a];
      }
    }
  }
  for (int m = 0; m < nb; ++m) {
    values[m] /= W;
    grads_param[m] = (grads_param[m] - values[m] * Wd) / W;
  }
  return nb;
}

NurbsVolume::PointMap NurbsVolume::map_point(const Vec3& xi) const {
  BasisScratch scratch;
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<Vec3> grad;
  const int nb = basis_at(xi, scratch, idx, val, grad);

  PointMap out;
  out.x = {0.0, 0.0, 0.0};
  out.jac = Mat3{};
  for (int m = 0; m < nb; ++m) {
    const auto& cp = grid_.pts[idx[m]];
    const Vec3 P{cp[0], cp[1], cp[2]};
    out.x += val[m] * P;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out.jac(r, c) += P[r] * grad[m][c];
  }
  out.det_jac = out.jac.det();
  if (!(out.det_jac > 0.0))
    throw numeric_error("non-positive Jacobian determinant in geometry map");
  return out;
}

NurbsVolume::FieldEval NurbsVolume::field_at(std::span<const double> coeffs,
                                             const Vec3& xi) const {
  if (static_cast<int>(coeffs.size()) != n_functions())
    throw std::invalid_argument("coefficient vector size mismatch");
  BasisScratch scratch;
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<Vec3> grad;
  const int nb = basis_at(xi, scratch, idx, val, grad);

  double value = 0.0;
  Vec3 grad_param{0.0, 0.0, 0.0};
  Mat3 jac{};
  for (int m = 0; m < nb; ++m) {
    const auto& cp = grid_.pts[idx[m]];
    value += coeffs[idx[m]] * val[m];
    grad_param += coeffs[idx[m]] * grad[m];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) jac(r, c) += cp[r] * grad[m][c];
  }
  if (!(jac.det() > 0.0))
    throw numeric_error("non-positive Jacobian determinant in field evaluation");
  return {value, jac.inverse().apply_transposed(grad_param)};
}

NurbsVolume::SurfacePoint NurbsVolume::face_point(FaceId f, double u, double v) const {
  const Vec3 xi = face_param(f, u, v);
  const PointMap pm = map_point(xi);
  const auto t = face_tangent_axes(f);
  const int a = face_axis(f);
  const Vec3 tu{pm.jac(0, t[0]), pm.jac(1, t[0]), pm.jac(2, t[0])};
  const Vec3 tv{pm.jac(0, t[1]), pm.jac(1, t[1]), pm.jac(2, t[1])};
  const Vec3 da{pm.jac(0, a), pm.jac(1, a), pm.jac(2, a)};
  Vec3 raw = tu.cross(tv);
  const double scale = raw.norm();
  if (!(scale > 0.0)) throw numeric_error("degenerate surface point");
  Vec3 n = raw / scale;
  // orient away from the solid: against the fixed direction on min faces
  const double side = n.dot(da);
  if ((face_is_min(f) && side > 0.0) || (!face_is_min(f) && side < 0.0)) n = n * -1.0;
  return {xi, pm.x, n, scale};
}

namespace {

// Boehm single-knot insertion along direction dir, on homogeneous coordinates.
void insert_knot_direction(std::array<KnotVector, 3>& kvs, ControlGrid& grid, int dir,
                           double u) {
  const KnotVector& kv = kvs[dir];
  const int p = kv.degree();
  const std::vector<double>& U = kv.values();
  const int span = kv.find_span(u);

  // refuse to split the patch apart
  int mult = 0;
  for (double val : U)
    if (val == u) ++mult;
  if (mult >= p)
    throw std::invalid_argument("knot insertion beyond multiplicity degree");

  std::array<int, 3> nd = grid.dims;
  ControlGrid out;
  out.dims = nd;
  out.dims[dir] += 1;
  out.pts.resize(out.dims[0] * out.dims[1] * out.dims[2]);

  auto homog = [](const std::array<double, 4>& c) {
    return std::array<double, 4>{c[0] * c[3], c[1] * c[3], c[2] * c[3], c[3]};
  };
  auto dehomog = [](const std::array<double, 4>& h) {
    return std::array<double, 4>{h[0] / h[3], h[1] / h[3], h[2] / h[3], h[3]};
  };

  // iterate over the lines of control points running along dir
  const int n_line = nd[dir];
  std::array<int, 2> other{};
  int no = 0;
  for (int d = 0; d < 3; ++d)
    if (d != dir) other[no++] = d;

  std::vector<std::array<double, 4>> line(n_line + 1);
  for (int b = 0; b < nd[other[1]]; ++b) {
    for (int a = 0; a < nd[other[0]]; ++a) {
      auto idx_of = [&](int along, const ControlGrid& g) {
        std::array<int, 3> ijk{};
        ijk[dir] = along;
        ijk[other[0]] = a;
        ijk[other[1]] = b;
        return g.index(ijk[0], ijk[1], ijk[2]);
      };
      for (int i = 0; i < n_line; ++i) line[i] = homog(grid.pts[idx_of(i, grid)]);
      for (int i = n_line; i > span - p; --i) {
        if (i >= span + 1) {
          line[i] = line[i - 1];
        } else {
          const double denom = U[i + p] - U[i];
          const double alpha = denom > 0.0 ? (u - U[i]) / denom : 0.0;
          for (int c = 0; c < 4; ++c)
            line[i][c] = alpha * line[i][c] + (1.0 - alpha) * line[i - 1][c];
        }
      }
      for (int i = 0; i < n_line + 1; ++i) out.pts[idx_of(i, out)] = dehomog(line[i]);
    }
  }

  std::vector<double> newU = U;
  newU.insert(std::upper_bound(newU.begin(), newU.end(), u), u);
  kvs[dir] = KnotVector(std::move(newU), p);
  grid = std::move(out);
}

}  // namespace

NurbsVolume NurbsVolume::refined(const std::array<std::vector<double>, 3>& new_knots) const {
  std::array<KnotVector, 3> kvs = kvs_;
  ControlGrid grid = grid_;
  for (int d = 0; d < 3; ++d) {
    std::vector<double> sorted = new_knots[d];
    std::sort(sorted.begin(), sorted.end());
    for (double u : sorted) {
      if (!(u > kvs[d].min_knot() && u < kvs[d].max_knot()))
        throw std::invalid_argument("refinement knot outside open range");
      insert_knot_direction(kvs, grid, d, u);
    }
  }
  return NurbsVolume(std::move(kvs), std::move(grid));
}

NurbsVolume quarter_cylinder_part() {
  const double mm = 1e-3;
  const double s2 = std::sqrt(2.0);
  const double wc = std::cos(M_PI / 8.0);

  // top-view arc row (on the removed cylinder, axis at (2,0) mm) and the
  // outer corner row; weights make the two-segment quarter circle exact
  const double arc[5][2] = {{1.0, 0.0},
                            {1.0, s2 - 1.0},
                            {2.0 - s2 / 2.0, s2 / 2.0},
                            {3.0 - s2, 1.0},
                            {2.0, 1.0}};
  const double outer[5][2] = {{0.0, 0.0}, {0.0, 1.0}, {0.0, 2.0}, {1.0, 2.0}, {2.0, 2.0}};
  const double w_arc[5] = {1.0, wc, 1.0, wc, 1.0};

  ControlGrid grid;
  grid.dims = {5, 2, 2};
  grid.pts.resize(grid.count());
  for (int k = 0; k < 2; ++k) {
    const double z = (k == 0) ? 0.0 : 2.0 * mm;
    for (int i = 0; i < 5; ++i) {
      grid.pts[grid.index(i, 0, k)] = {arc[i][0] * mm, arc[i][1] * mm, z, w_arc[i]};
      grid.pts[grid.index(i, 1, k)] = {outer[i][0] * mm, outer[i][1] * mm, z, 1.0};
    }
  }

  KnotVector xi({0, 0, 0, 0.5, 0.5, 1, 1, 1}, 2);
  KnotVector eta({0, 0, 1, 1}, 1);
  KnotVector zeta({0, 0, 1, 1}, 1);
  return NurbsVolume({xi, eta, zeta}, std::move(grid));
}

NurbsVolume unit_cube(double edge_length, std::array<int, 3> degrees) {
  auto bezier_kv = [](int p) {
    std::vector<double> v(2 * (p + 1), 0.0);
    std::fill(v.begin() + p + 1, v.end(), 1.0);
    return KnotVector(std::move(v), p);
  };
  std::array<KnotVector, 3> kvs = {bezier_kv(degrees[0]), bezier_kv(degrees[1]),
                                   bezier_kv(degrees[2])};
  ControlGrid grid;
  grid.dims = {degrees[0] + 1, degrees[1] + 1, degrees[2] + 1};
  grid.pts.resize(grid.count());
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        grid.pts[grid.index(i, j, k)] = {edge_length * i / degrees[0],
                                         edge_length * j / degrees[1],
                                         edge_length * k / degrees[2], 1.0};
  return NurbsVolume(kvs, std::move(grid));
}

}  // namespace thermiga
