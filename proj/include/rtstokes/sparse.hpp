#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace rtstokes {

/// Compressed sparse row matrix with sorted column indices.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  struct Triplet {
    int row, col;
    double value;
  };
  /// Duplicates are summed.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const int> row_offsets() const { return row_ptr_; }
  std::span<const int> columns() const { return cols_idx_; }
  std::span<const double> values() const { return values_; }

  /// Entry (i, j), zero when structurally absent.
  double at(int i, int j) const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;

  /// max |A_ij - A_ji| over stored entries.
  double max_asymmetry() const;
  double max_abs() const;
  bool structurally_symmetric() const;

  bool operator==(const CsrMatrix &) const = default;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> cols_idx_;
  std::vector<double> values_;
};

/// Matrix Market coordinate (real general) text.
void write_matrix_market(const CsrMatrix &a, std::ostream &out);

/// Zero-fill incomplete Cholesky factor L (A ~ L L^T) on the lower pattern
/// of A. A nonpositive pivot triggers a retry on A + shift I, with
/// shift = max(1e-12, 1e-3 * mean diagonal) doubled up to eight times.
class IcPreconditioner {
 public:
  IcPreconditioner() = default;
  explicit IcPreconditioner(const CsrMatrix &a);

  /// z = (L L^T)^{-1} r
  void apply(std::span<const double> r, std::span<double> z) const;

  const CsrMatrix &factor() const { return lower_; }
  /// Diagonal shift used, 0 when the plain factorization succeeded.
  double shift() const { return shift_; }

 private:
  bool try_factor(const CsrMatrix &a, double shift);

  CsrMatrix lower_;
  std::vector<double> diag_;
  double shift_ = 0.0;
};

inline IcPreconditioner ic0_factor(const CsrMatrix &a) { return IcPreconditioner(a); }

struct PcgOptions {
  double rel_tol = 1e-10;
  /// 0 selects 10 * n.
  int max_iter = 0;
};

struct PcgResult {
  int iterations = 0;
  /// ||b - A x|| / ||b|| (0 when b == 0).
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients. x holds the initial guess on entry.
/// Throws SolverError when p^T A p <= 0 (matrix or preconditioner not SPD).
/// On non-convergence the last iterate is kept and converged is false.
/// When `iterates` is given, a copy of every iterate is appended.
PcgResult pcg_solve(const CsrMatrix &a, std::span<const double> b, const IcPreconditioner &m,
                    std::span<double> x, const PcgOptions &options = {},
                    std::vector<std::vector<double>> *iterates = nullptr);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace rtstokes
