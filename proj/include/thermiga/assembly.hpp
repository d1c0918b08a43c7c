#pragma once

#include <functional>
#include <optional>

#include "thermiga/mesh.hpp"
#include "thermiga/sparse.hpp"

namespace thermiga {

/// Sparsity pattern from tensor-product basis supports (values zeroed).
CsrMatrix make_pattern(const NurbsVolume& vol);

/// M_ij = integral of rho c_p N_i N_j over the part.
CsrMatrix assemble_mass(const Mesh& mesh, const Material& mat, int n_threads = 1);

/// K_ij = integral of k grad N_i . grad N_j over the part.
CsrMatrix assemble_stiffness(const Mesh& mesh, const Material& mat, int n_threads = 1);

struct SystemMatrices {
  CsrMatrix mass;
  CsrMatrix stiffness;
};

SystemMatrices assemble_system(const Mesh& mesh, const Material& mat, int n_threads = 1);

/// F_i = integral over the lateral surface of integrand(x, n) N_i dS, where
/// the integrand is the incoming flux density (-q_N). Face elements within
/// `fine_radius` of `fine_focus` use the elevated quadrature rule.
void assemble_boundary_load(const BoundarySets& boundary,
                            const std::function<double(const Vec3&, const Vec3&)>& integrand,
                            std::optional<Vec3> fine_focus, double fine_radius,
                            std::vector<double>& load, int n_threads = 1);

/// Production load: q_N = k dT_tilde/dn from the superposed analytic field;
/// the fine rule follows the most recently activated source.
void assemble_flux_load(const BoundarySets& boundary, const std::vector<PointSource>& sources,
                        const Material& mat, double t, double fine_radius,
                        std::vector<double>& load, const SuperposeOptions& opts = {},
                        int n_threads = 1);

/// F_i += integral of f(x) N_i dV (volumetric source; used by verification).
void assemble_volume_load(const Mesh& mesh, const std::function<double(const Vec3&)>& f,
                          std::vector<double>& load, int n_threads = 1);

/// Theta-scheme operator with symmetric Dirichlet elimination. Builds
///   A = M/dt + theta K      (solved on free DOFs)
///   B = M/dt - (1-theta) K  (applied to the previous state)
/// once; constrained values are lifted into the right-hand side through the
/// retained coupling columns at both time levels.
class DirichletSystem {
 public:
  DirichletSystem(const SystemMatrices& sys, const DofMap& dofs, double theta, double dt);

  const CsrMatrix& reduced_operator() const { return A_ff_; }
  const DofMap& dofs() const { return *dofs_; }
  double theta() const { return theta_; }
  double dt() const { return dt_; }

  /// rhs_f = [B T_n]_f + theta F_{n+1,f} + (1-theta) F_{n,f} - [A g_{n+1}]_f
  /// with T_n the full coefficient vector at the previous level and g_{n+1}
  /// the constrained values at the next level (zero-padded on free DOFs).
  void step_rhs(std::span<const double> full_state_n,
                std::span<const double> constrained_np1, std::span<const double> load_n,
                std::span<const double> load_np1, std::vector<double>& rhs) const;

  /// Scatter free coefficients + constrained values into a full vector.
  void expand(std::span<const double> free_coeffs, std::span<const double> constrained,
              std::vector<double>& full) const;

 private:
  const DofMap* dofs_;
  double theta_, dt_;
  CsrMatrix A_full_;  // M/dt + theta K
  CsrMatrix B_full_;  // M/dt - (1-theta) K
  CsrMatrix A_ff_;
  mutable std::vector<double> scratch_a_, scratch_b_;
};

}  // namespace thermiga
