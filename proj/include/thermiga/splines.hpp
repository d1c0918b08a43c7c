#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "thermiga/core.hpp"

namespace thermiga {

/// Open (clamped) knot vector with its polynomial degree.
class KnotVector {
 public:
  KnotVector(std::vector<double> values, int degree);

  int degree() const { return degree_; }
  const std::vector<double>& values() const { return values_; }
  double min_knot() const { return values_.front(); }
  double max_knot() const { return values_.back(); }
  /// Number of basis functions n = len(values) - degree - 1.
  int basis_count() const { return static_cast<int>(values_.size()) - degree_ - 1; }

  /// Index i of the nonzero span with values[i] <= u < values[i+1];
  /// the last nonzero span at the right end. Throws std::domain_error
  /// for u outside the knot range.
  int find_span(double u) const;

  /// Nonzero basis functions and derivatives at u on the given span.
  /// out is (max_deriv+1) x (degree+1), row-major; row 0 holds values.
  /// Derivatives of order > degree come out as zero.
  void basis_ders(double u, int span, int max_deriv, double* out) const;

  /// Unique breakpoints (span boundaries with positive length), ends included.
  std::vector<double> breakpoints() const;

  /// Greville abscissae (knot averages), one per basis function.
  std::vector<double> greville() const;

  /// Affinely rescaled copy with range [0,1].
  KnotVector normalized() const;

  /// Copy with extra knots merged in (values must lie strictly inside the range).
  KnotVector with_knots(const std::vector<double>& extra) const;

 private:
  std::vector<double> values_;
  int degree_;
};

/// The six parametric faces of a trivariate patch.
enum class FaceId { ximin, ximax, etamin, etamax, zetamin, zetamax };

inline constexpr std::array<FaceId, 6> kAllFaces = {
    FaceId::ximin, FaceId::ximax, FaceId::etamin,
    FaceId::etamax, FaceId::zetamin, FaceId::zetamax};

const char* face_name(FaceId f);
FaceId face_from_name(const std::string& name);
/// Parametric direction the face is orthogonal to (0,1,2).
int face_axis(FaceId f);
bool face_is_min(FaceId f);
/// The two in-face parametric directions, in (u,v) order.
std::array<int, 2> face_tangent_axes(FaceId f);
/// Lift in-face coordinates (u,v) to a volume parametric point.
Vec3 face_param(FaceId f, double u, double v);

/// Weighted control net, lexicographic with the first index fastest.
struct ControlGrid {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::array<double, 4>> pts;  // x, y, z (m), weight

  int index(int i, int j, int k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  int count() const { return dims[0] * dims[1] * dims[2]; }
};

/// Scratch space for basis evaluation; reusable across calls.
struct BasisScratch {
  std::array<std::vector<double>, 3> ders;  // per-direction 1D table
  std::vector<double> tensor_vals;
  std::vector<Vec3> tensor_grads;
};

/// Single trivariate NURBS patch: geometry map and the rational basis used
/// both for the geometry and for the discrete correction field.
class NurbsVolume {
 public:
  NurbsVolume(std::array<KnotVector, 3> kvs, ControlGrid grid);

  const KnotVector& knots(int d) const { return kvs_[d]; }
  const ControlGrid& grid() const { return grid_; }
  std::array<int, 3> degrees() const;
  std::array<int, 3> basis_counts() const;
  int n_functions() const { return grid_.count(); }

  struct PointMap {
    Vec3 x;
    Mat3 jac;      // dx/dxi
    double det_jac;
  };
  /// Geometry map, Jacobian and its determinant at a parametric point.
  /// Throws numeric_error when det(J) <= 0.
  PointMap map_point(const Vec3& xi) const;

  /// Nonzero rational basis functions at xi: flat global indices, values,
  /// and parametric gradients. Returns the number of nonzero functions.
  int basis_at(const Vec3& xi, BasisScratch& scratch, std::vector<int>& indices,
               std::vector<double>& values, std::vector<Vec3>& grads_param) const;

  struct FieldEval {
    double value;
    Vec3 grad;  // physical-space gradient
  };
  /// Evaluate a coefficient field (one coefficient per control point).
  FieldEval field_at(std::span<const double> coeffs, const Vec3& xi) const;

  struct SurfacePoint {
    Vec3 xi;          // volume parametric coords
    Vec3 x;           // physical point
    Vec3 normal;      // unit outward normal
    double area_scale;  // |t_u x t_v|: parametric-to-physical area factor
  };
  /// Point on a boundary face with outward normal and surface Jacobian.
  SurfacePoint face_point(FaceId f, double u, double v) const;

  /// Knot-insertion refinement; geometry is preserved exactly.
  NurbsVolume refined(const std::array<std::vector<double>, 3>& new_knots) const;

 private:
  std::array<KnotVector, 3> kvs_;
  ControlGrid grid_;
};

/// The quarter-cylinder benchmark part: a 2x2x2 mm cube with a quarter
/// cylinder of radius 1 mm (axis at (2,0) mm) removed, extruded in x3.
NurbsVolume quarter_cylinder_part();

/// Axis-aligned cube [0,L]^3 with the given degrees; geometry map is affine.
NurbsVolume unit_cube(double edge_length, std::array<int, 3> degrees);

}  // namespace thermiga
