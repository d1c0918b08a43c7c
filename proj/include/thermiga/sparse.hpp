#pragma once

#include <span>
#include <vector>

#include "thermiga/core.hpp"

namespace thermiga {

/// Compressed sparse row matrix.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // rows+1
  std::vector<int> col_idx;  // sorted within each row
  std::vector<double> vals;

  int nnz() const { return static_cast<int>(col_idx.size()); }
  void zero() { std::fill(vals.begin(), vals.end(), 0.0); }

  /// Value slot for (r,c); binary search within the row. Throws if the
  /// entry is not in the pattern.
  double& at(int r, int c);
  double get(int r, int c) const;  // 0 when outside the pattern

  void multiply(std::span<const double> x, std::span<double> y) const;

  /// Text dump, one "row col value" triple per line.
  void dump_coordinate(const std::string& path) const;
};

struct PcgOptions {
  double tol = 1e-10;   // relative residual target
  int max_iter = 5000;
};

struct PcgResult {
  int iterations = 0;
  double rel_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. `x` holds the
/// initial guess on entry and the solution on exit. Throws numeric_error with
/// a residual report when the iteration cap is hit.
PcgResult pcg_jacobi(const CsrMatrix& A, std::span<const double> b, std::span<double> x,
                     const PcgOptions& opts = {});

}  // namespace thermiga
