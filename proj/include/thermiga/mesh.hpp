#pragma once

#include <optional>
#include <vector>

#include "thermiga/analytic.hpp"
#include "thermiga/splines.hpp"

namespace thermiga {

/// Physical role of each parametric face.
enum class FaceRole { bottom, lateral, top };

struct BoundaryTags {
  std::array<FaceRole, 6> role{};  // indexed by FaceId

  FaceRole role_of(FaceId f) const { return role[static_cast<int>(f)]; }
  FaceId bottom_face() const;
  void validate() const;  // exactly one bottom, at least one lateral

  /// zetamin fused to the platform, zetamax under the powder layer,
  /// the four remaining faces lateral.
  static BoundaryTags extruded_default();
};

struct Element {
  std::array<int, 3> spans;
  std::array<std::array<double, 2>, 3> box;  // parametric bounds per direction
  std::vector<int> dofs;  // global function indices of the tensor block
};

/// Computational mesh over the nonzero knot spans of a patch. Quadrature
/// data is produced per element on demand; the mesh itself stays immutable
/// and cheap to share between workers.
class Mesh {
 public:
  Mesh(NurbsVolume vol, std::array<int, 3> quad_points);

  const NurbsVolume& volume() const { return vol_; }
  int n_elements() const { return static_cast<int>(elements_.size()); }
  int n_functions() const { return vol_.n_functions(); }
  const Element& element(int e) const { return elements_[e]; }
  std::array<int, 3> quad_points() const { return quad_points_; }

  struct QuadData {
    int n_qp = 0;
    int n_basis = 0;
    std::vector<double> weight;  // gauss weight x detJ x parametric box measure
    std::vector<Vec3> x;
    std::vector<double> N;      // n_qp x n_basis, rational basis values
    std::vector<Vec3> grad_N;   // physical gradients
    BasisScratch scratch;
    std::vector<int> idx_buf;
    std::vector<double> val_buf;
    std::vector<Vec3> grad_buf;
  };
  /// Fill quadrature data for element e; `out` is reusable scratch.
  void element_quad(int e, QuadData& out) const;

 private:
  NurbsVolume vol_;
  std::array<int, 3> quad_points_;
  std::vector<Element> elements_;
};

/// Build the mesh with the default (degree+1 per direction) or an explicit
/// Gauss point count. Verifies det(J) > 0 at every quadrature point.
Mesh build_mesh(NurbsVolume vol, int quad_order = 0);

/// Free/constrained partition of the control variables. Constrained are the
/// control points whose basis functions are nonzero on the bottom face.
struct DofMap {
  std::vector<int> free_index;         // per function: index into free set or -1
  std::vector<int> constrained_index;  // per function: index into constrained set or -1
  std::vector<int> free_list;
  std::vector<int> constrained_list;

  int n_free() const { return static_cast<int>(free_list.size()); }
  int n_constrained() const { return static_cast<int>(constrained_list.size()); }
};

DofMap make_dof_map(const NurbsVolume& vol, const BoundaryTags& tags);

struct FaceQuadPoint {
  Vec3 x;
  Vec3 normal;
  double weight;  // gauss weight x area scale x parametric box measure
};

struct FaceElement {
  std::array<int, 2> spans;
  std::array<std::array<double, 2>, 2> box;
  std::vector<int> dofs;              // volume function indices active on the face block
  std::vector<FaceQuadPoint> qp_base;
  std::vector<double> N_base;         // n_qp x n_dofs
  std::vector<FaceQuadPoint> qp_fine;
  std::vector<double> N_fine;
  Vec3 center;                        // physical element center (for rule selection)
};

struct LateralFace {
  FaceId face;
  std::vector<FaceElement> elements;
};

/// Boundary quadrature sets: lateral faces carry surface rules with normals;
/// the top face is recorded but generates no load; the bottom face is the
/// Dirichlet surface handled through the DofMap.
struct BoundarySets {
  std::vector<LateralFace> lateral;
  FaceId bottom;
  std::vector<FaceId> top;
};

BoundarySets classify_boundary(const Mesh& mesh, const BoundaryTags& tags,
                               int fine_rule_multiplier = 3);

/// Dirichlet control values (degC rise) for the constrained set at time t:
/// the correction field must match -T_tilde on the platform, realized by
/// Greville-point collocation on the bottom face.
std::vector<double> dirichlet_values(const NurbsVolume& vol, const DofMap& dofs,
                                     const BoundaryTags& tags,
                                     const std::vector<PointSource>& sources,
                                     const Material& mat, double t,
                                     const SuperposeOptions& opts = {});

struct MeshStats {
  double l_min = 0.0;  // minimum physical element edge on the scanned boundary, m
  double l_e = 0.0;    // l_min / r_laser
  int n_dofs = 0;
  int n_elements = 0;
};

/// l_min is measured along the v=edge_v edge of the given face (the scanned
/// boundary curve); l_e normalizes it by the laser spot radius.
MeshStats mesh_stats(const Mesh& mesh, const DofMap& dofs, FaceId profile_face,
                     double spot_radius, double edge_v = 1.0);

/// Knots realizing approximately `target_elements` uniform elements across
/// the whole direction, preserving existing breakpoints.
std::vector<double> uniform_refinement_knots(const KnotVector& kv, int target_elements);

/// Geometrically graded variant: element sizes form a geometric progression
/// with the smallest elements toward parametric `focus` (0 or 1).
std::vector<double> graded_refinement_knots(const KnotVector& kv, int target_elements,
                                            double ratio, double focus);

}  // namespace thermiga
