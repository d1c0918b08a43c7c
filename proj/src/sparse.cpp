#include "thermiga/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace thermiga {

double& CsrMatrix::at(int r, int c) {
  auto begin = col_idx.begin() + row_ptr[r];
  auto end = col_idx.begin() + row_ptr[r + 1];
  auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) throw std::out_of_range("entry not in sparsity pattern");
  return vals[it - col_idx.begin()];
}

double CsrMatrix::get(int r, int c) const {
  auto begin = col_idx.begin() + row_ptr[r];
  auto end = col_idx.begin() + row_ptr[r + 1];
  auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return vals[it - col_idx.begin()];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[col_idx[k]];
    y[r] = acc;
  }
}

void CsrMatrix::dump_coordinate(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      out << r << " " << col_idx[k] << " " << fmt_full(vals[k]) << "\n";
}

PcgResult pcg_jacobi(const CsrMatrix& A, std::span<const double> b, std::span<double> x,
                     const PcgOptions& opts) {
  const int n = A.rows;
  if (A.cols != n || static_cast<int>(b.size()) != n || static_cast<int>(x.size()) != n)
    throw std::invalid_argument("pcg: dimension mismatch");

  std::vector<double> inv_diag(n);
  for (int r = 0; r < n; ++r) {
    const double d = A.get(r, r);
    if (!(d > 0.0)) throw numeric_error("pcg: non-positive diagonal, matrix not SPD");
    inv_diag[r] = 1.0 / d;
  }

  double bnorm = 0.0;
  for (int i = 0; i < n; ++i) bnorm += b[i] * b[i];
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }

  std::vector<double> r(n), z(n), p(n), Ap(n);
  A.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];

  double rz = 0.0;
  for (int i = 0; i < n; ++i) {
    z[i] = inv_diag[i] * r[i];
    rz += r[i] * z[i];
  }
  p = z;

  double rel = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    double rnorm = 0.0;
    for (int i = 0; i < n; ++i) rnorm += r[i] * r[i];
    rel = std::sqrt(rnorm) / bnorm;
    if (rel <= opts.tol) return {it, rel};

    A.multiply(p, Ap);
    double pAp = 0.0;
    for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
    if (!(pAp > 0.0)) throw numeric_error("pcg: indefinite direction, matrix not SPD");
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = inv_diag[i] * r[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw numeric_error("pcg: no convergence in " + std::to_string(opts.max_iter) +
                      " iterations, relative residual " + fmt_full(rel));
}

}  // namespace thermiga
