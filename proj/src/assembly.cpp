#include "thermiga/assembly.hpp"

#include <algorithm>
#include <cmath>

namespace thermiga {

CsrMatrix make_pattern(const NurbsVolume& vol) {
  const auto n = vol.basis_counts();
  const auto p = vol.degrees();
  const int total = n[0] * n[1] * n[2];

  CsrMatrix m;
  m.rows = m.cols = total;
  m.row_ptr.assign(total + 1, 0);

  auto clamp_range = [](int c, int pd, int nd, int& lo, int& hi) {
    lo = std::max(0, c - pd);
    hi = std::min(nd - 1, c + pd);
  };

  // two functions interact iff their tensor indices are within degree in
  // every direction (support overlap on some element)
  int row = 0;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i, ++row) {
        int ilo, ihi, jlo, jhi, klo, khi;
        clamp_range(i, p[0], n[0], ilo, ihi);
        clamp_range(j, p[1], n[1], jlo, jhi);
        clamp_range(k, p[2], n[2], klo, khi);
        m.row_ptr[row + 1] = (ihi - ilo + 1) * (jhi - jlo + 1) * (khi - klo + 1);
      }
  for (int r = 0; r < total; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  m.col_idx.resize(m.row_ptr[total]);
  m.vals.assign(m.row_ptr[total], 0.0);

  row = 0;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i, ++row) {
        int ilo, ihi, jlo, jhi, klo, khi;
        clamp_range(i, p[0], n[0], ilo, ihi);
        clamp_range(j, p[1], n[1], jlo, jhi);
        clamp_range(k, p[2], n[2], klo, khi);
        int slot = m.row_ptr[row];
        for (int kk = klo; kk <= khi; ++kk)
          for (int jj = jlo; jj <= jhi; ++jj)
            for (int ii = ilo; ii <= ihi; ++ii)
              m.col_idx[slot++] = ii + n[0] * (jj + n[1] * kk);
      }
  return m;
}

namespace {

enum class Kind { mass, stiffness };

CsrMatrix assemble_matrix(const Mesh& mesh, const Material& mat, Kind kind, int n_threads) {
  mat.validate();
  CsrMatrix out = make_pattern(mesh.volume());
  const double coef =
      (kind == Kind::mass) ? mat.volumetric_capacity() : mat.conductivity;

  const int ne = mesh.n_elements();
  std::vector<std::vector<double>> local(ne);

  parallel_for(ne, n_threads, [&](std::size_t begin, std::size_t end) {
    Mesh::QuadData quad;
    for (std::size_t e = begin; e < end; ++e) {
      mesh.element_quad(static_cast<int>(e), quad);
      const int nb = quad.n_basis;
      auto& loc = local[e];
      loc.assign(static_cast<std::size_t>(nb) * nb, 0.0);
      for (int q = 0; q < quad.n_qp; ++q) {
        const double w = coef * quad.weight[q];
        const double* N = &quad.N[static_cast<std::size_t>(q) * nb];
        const Vec3* G = &quad.grad_N[static_cast<std::size_t>(q) * nb];
        for (int a = 0; a < nb; ++a)
          for (int b = 0; b <= a; ++b) {
            const double v = (kind == Kind::mass) ? w * N[a] * N[b] : w * G[a].dot(G[b]);
            loc[static_cast<std::size_t>(a) * nb + b] += v;
          }
      }
    }
  });

  // deterministic scatter in element order; symmetry by construction
  for (int e = 0; e < ne; ++e) {
    const auto& dofs = mesh.element(e).dofs;
    const int nb = static_cast<int>(dofs.size());
    const auto& loc = local[e];
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = loc[static_cast<std::size_t>(a) * nb + b];
        out.at(dofs[a], dofs[b]) += v;
        if (a != b) out.at(dofs[b], dofs[a]) += v;
      }
  }
  return out;
}

}  // namespace

CsrMatrix assemble_mass(const Mesh& mesh, const Material& mat, int n_threads) {
  return assemble_matrix(mesh, mat, Kind::mass, n_threads);
}

CsrMatrix assemble_stiffness(const Mesh& mesh, const Material& mat, int n_threads) {
  return assemble_matrix(mesh, mat, Kind::stiffness, n_threads);
}

SystemMatrices assemble_system(const Mesh& mesh, const Material& mat, int n_threads) {
  return {assemble_mass(mesh, mat, n_threads), assemble_stiffness(mesh, mat, n_threads)};
}

void assemble_boundary_load(const BoundarySets& boundary,
                            const std::function<double(const Vec3&, const Vec3&)>& integrand,
                            std::optional<Vec3> fine_focus, double fine_radius,
                            std::vector<double>& load, int n_threads) {
  std::fill(load.begin(), load.end(), 0.0);
  for (const auto& face : boundary.lateral) {
    const int ne = static_cast<int>(face.elements.size());
    std::vector<std::vector<double>> local(ne);
    parallel_for(ne, n_threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t e = begin; e < end; ++e) {
        const FaceElement& fe = face.elements[e];
        const bool fine = fine_focus && (fe.center - *fine_focus).norm() < fine_radius;
        const auto& qps = fine ? fe.qp_fine : fe.qp_base;
        const auto& N = fine ? fe.N_fine : fe.N_base;
        const int nb = static_cast<int>(fe.dofs.size());
        auto& loc = local[e];
        loc.assign(nb, 0.0);
        for (std::size_t q = 0; q < qps.size(); ++q) {
          const double g = integrand(qps[q].x, qps[q].normal) * qps[q].weight;
          const double* row = &N[q * nb];
          for (int a = 0; a < nb; ++a) loc[a] += g * row[a];
        }
      }
    });
    for (int e = 0; e < ne; ++e) {
      const FaceElement& fe = face.elements[e];
      for (std::size_t a = 0; a < fe.dofs.size(); ++a) load[fe.dofs[a]] += local[e][a];
    }
  }
}

void assemble_flux_load(const BoundarySets& boundary, const std::vector<PointSource>& sources,
                        const Material& mat, double t, double fine_radius,
                        std::vector<double>& load, const SuperposeOptions& opts,
                        int n_threads) {
  // the fine rule follows the most recently activated source
  std::optional<Vec3> focus;
  for (const auto& s : sources) {
    if (s.t_activate > t) break;
    focus = s.position;
  }
  const double k = mat.conductivity;
  assemble_boundary_load(
      boundary,
      [&](const Vec3& x, const Vec3& n) {
        // incoming flux -q_N with q_N = k dT_tilde/dn
        return -k * superpose(sources, mat, x, t, opts).grad.dot(n);
      },
      focus, fine_radius, load, n_threads);
}

void assemble_volume_load(const Mesh& mesh, const std::function<double(const Vec3&)>& f,
                          std::vector<double>& load, int n_threads) {
  const int ne = mesh.n_elements();
  std::vector<std::vector<double>> local(ne);
  parallel_for(ne, n_threads, [&](std::size_t begin, std::size_t end) {
    Mesh::QuadData quad;
    for (std::size_t e = begin; e < end; ++e) {
      mesh.element_quad(static_cast<int>(e), quad);
      const int nb = quad.n_basis;
      auto& loc = local[e];
      loc.assign(nb, 0.0);
      for (int q = 0; q < quad.n_qp; ++q) {
        const double g = f(quad.x[q]) * quad.weight[q];
        const double* N = &quad.N[static_cast<std::size_t>(q) * nb];
        for (int a = 0; a < nb; ++a) loc[a] += g * N[a];
      }
    }
  });
  for (int e = 0; e < ne; ++e) {
    const auto& dofs = mesh.element(e).dofs;
    for (std::size_t a = 0; a < dofs.size(); ++a) load[dofs[a]] += local[e][a];
  }
}

namespace {

CsrMatrix combine(const CsrMatrix& M, const CsrMatrix& K, double cm, double ck) {
  CsrMatrix out = M;
  for (std::size_t i = 0; i < out.vals.size(); ++i)
    out.vals[i] = cm * M.vals[i] + ck * K.vals[i];
  return out;
}

CsrMatrix extract_free(const CsrMatrix& A, const DofMap& dofs) {
  CsrMatrix out;
  out.rows = out.cols = dofs.n_free();
  out.row_ptr.assign(out.rows + 1, 0);
  for (int f = 0; f < dofs.n_free(); ++f) {
    const int r = dofs.free_list[f];
    int count = 0;
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      if (dofs.free_index[A.col_idx[k]] >= 0) ++count;
    out.row_ptr[f + 1] = count;
  }
  for (int f = 0; f < out.rows; ++f) out.row_ptr[f + 1] += out.row_ptr[f];
  out.col_idx.resize(out.row_ptr[out.rows]);
  out.vals.resize(out.row_ptr[out.rows]);
  for (int f = 0; f < dofs.n_free(); ++f) {
    const int r = dofs.free_list[f];
    int slot = out.row_ptr[f];
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
      const int fc = dofs.free_index[A.col_idx[k]];
      if (fc >= 0) {
        out.col_idx[slot] = fc;
        out.vals[slot] = A.vals[k];
        ++slot;
      }
    }
  }
  return out;
}

}  // namespace

DirichletSystem::DirichletSystem(const SystemMatrices& sys, const DofMap& dofs, double theta,
                                 double dt)
    : dofs_(&dofs), theta_(theta), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("theta scheme: dt must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("theta scheme: theta must be in [0,1]");
  if (sys.mass.nnz() != sys.stiffness.nnz() || sys.mass.rows != sys.stiffness.rows)
    throw std::invalid_argument("theta scheme: mass/stiffness pattern mismatch");
  A_full_ = combine(sys.mass, sys.stiffness, 1.0 / dt, theta);
  B_full_ = combine(sys.mass, sys.stiffness, 1.0 / dt, -(1.0 - theta));
  A_ff_ = extract_free(A_full_, dofs);
}

void DirichletSystem::step_rhs(std::span<const double> full_state_n,
                               std::span<const double> constrained_np1,
                               std::span<const double> load_n,
                               std::span<const double> load_np1,
                               std::vector<double>& rhs) const {
  const int n = A_full_.rows;
  if (static_cast<int>(full_state_n.size()) != n)
    throw std::invalid_argument("step_rhs: full state size mismatch");
  if (static_cast<int>(constrained_np1.size()) != dofs_->n_constrained())
    throw std::invalid_argument("step_rhs: constrained values size mismatch");

  scratch_a_.resize(n);
  scratch_b_.resize(n);
  B_full_.multiply(full_state_n, scratch_a_);

  // constrained values of the next level, zero on free DOFs
  std::fill(scratch_b_.begin(), scratch_b_.end(), 0.0);
  for (int c = 0; c < dofs_->n_constrained(); ++c)
    scratch_b_[dofs_->constrained_list[c]] = constrained_np1[c];
  std::vector<double> coupling(n);
  A_full_.multiply(scratch_b_, coupling);

  rhs.resize(dofs_->n_free());
  for (int f = 0; f < dofs_->n_free(); ++f) {
    const int g = dofs_->free_list[f];
    rhs[f] = scratch_a_[g] - coupling[g] + theta_ * load_np1[g] + (1.0 - theta_) * load_n[g];
  }
}

void DirichletSystem::expand(std::span<const double> free_coeffs,
                             std::span<const double> constrained,
                             std::vector<double>& full) const {
  full.assign(A_full_.rows, 0.0);
  for (int f = 0; f < dofs_->n_free(); ++f) full[dofs_->free_list[f]] = free_coeffs[f];
  for (int c = 0; c < dofs_->n_constrained(); ++c)
    full[dofs_->constrained_list[c]] = constrained[c];
}

}  // namespace thermiga
