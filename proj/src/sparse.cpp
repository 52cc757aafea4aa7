#include "rtstokes/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "rtstokes/error.hpp"

namespace rtstokes {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet &a, const Triplet &b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const Triplet &t = triplets[k];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw InvalidArgument("triplet index out of range");
    double v = 0.0;
    std::size_t j = k;
    for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j) v += triplets[j].value;
    m.cols_idx_.push_back(t.col);
    m.values_.push_back(v);
    ++m.row_ptr_[t.row + 1];
    k = j;
  }
  for (int i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  return m;
}

double CsrMatrix::at(int i, int j) const {
  const auto begin = cols_idx_.begin() + row_ptr_[i];
  const auto end = cols_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return it != end && *it == j ? values_[it - cols_idx_.begin()] : 0.0;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[cols_idx_[k]];
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

double CsrMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      worst = std::max(worst, std::abs(values_[k] - at(cols_idx_[k], i)));
  return worst;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool CsrMatrix::structurally_symmetric() const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const int j = cols_idx_[k];
      const auto begin = cols_idx_.begin() + row_ptr_[j];
      const auto end = cols_idx_.begin() + row_ptr_[j + 1];
      if (!std::binary_search(begin, end, i)) return false;
    }
  }
  return true;
}

void write_matrix_market(const CsrMatrix &a, std::ostream &out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nonzeros() << "\n";
  out << std::setprecision(17);
  const auto rp = a.row_offsets();
  const auto ci = a.columns();
  const auto v = a.values();
  for (int i = 0; i < a.rows(); ++i)
    for (int k = rp[i]; k < rp[i + 1]; ++k) out << i + 1 << " " << ci[k] + 1 << " " << v[k] << "\n";
}

IcPreconditioner::IcPreconditioner(const CsrMatrix &a) {
  if (a.rows() != a.cols()) throw InvalidArgument("IC(0) needs a square matrix");
  if (try_factor(a, 0.0)) return;
  double mean_diag = 0.0;
  for (int i = 0; i < a.rows(); ++i) mean_diag += std::abs(a.at(i, i));
  mean_diag /= std::max(1, a.rows());
  double shift = std::max(1e-12, 1e-3 * mean_diag);
  for (int attempt = 0; attempt < 8; ++attempt, shift *= 2.0)
    if (try_factor(a, shift)) return;
  throw SolverError("incomplete Cholesky breakdown persists after diagonal shifts");
}

bool IcPreconditioner::try_factor(const CsrMatrix &a, double shift) {
  const int n = a.rows();
  const auto rp = a.row_offsets();
  const auto ci = a.columns();
  const auto av = a.values();

  std::vector<CsrMatrix::Triplet> lower;
  std::vector<int> lp(n + 1, 0);
  std::vector<int> lc;
  std::vector<double> lv;
  lc.reserve(a.nonzeros() / 2 + n);
  lv.reserve(a.nonzeros() / 2 + n);
  std::vector<double> diag(n, 0.0);

  for (int i = 0; i < n; ++i) {
    const int row_begin = static_cast<int>(lc.size());
    double aii = shift;
    bool has_diag = false;
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      const int j = ci[k];
      if (j > i) break;
      if (j == i) {
        aii += av[k];
        has_diag = true;
        continue;
      }
      // L_ij = (A_ij - sum_{m<j} L_im L_jm) / L_jj over the shared pattern.
      double s = av[k];
      int p = row_begin, q = lp[j];
      const int p_end = static_cast<int>(lc.size()), q_end = lp[j + 1] - 1;  // row j ends with its diagonal
      while (p < p_end && q < q_end) {
        if (lc[p] == lc[q]) {
          s -= lv[p] * lv[q];
          ++p;
          ++q;
        } else if (lc[p] < lc[q]) {
          ++p;
        } else {
          ++q;
        }
      }
      lc.push_back(j);
      lv.push_back(s / diag[j]);
    }
    if (!has_diag) return false;
    double d = aii;
    for (int p = row_begin; p < static_cast<int>(lc.size()); ++p) d -= lv[p] * lv[p];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    diag[i] = std::sqrt(d);
    lc.push_back(i);
    lv.push_back(diag[i]);
    lp[i + 1] = static_cast<int>(lc.size());
  }

  std::vector<CsrMatrix::Triplet> trip;
  trip.reserve(lc.size());
  for (int i = 0; i < n; ++i)
    for (int k = lp[i]; k < lp[i + 1]; ++k) trip.push_back({i, lc[k], lv[k]});
  lower_ = CsrMatrix::from_triplets(n, n, std::move(trip));
  diag_ = std::move(diag);
  shift_ = shift;
  return true;
}

void IcPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const int n = lower_.rows();
  const auto rp = lower_.row_offsets();
  const auto ci = lower_.columns();
  const auto lv = lower_.values();
  // Forward: L y = r (diagonal is the last entry of each row).
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (int k = rp[i]; k < rp[i + 1] - 1; ++k) s -= lv[k] * z[ci[k]];
    z[i] = s / diag_[i];
  }
  // Backward: L^T z = y, column-oriented over the rows of L.
  for (int i = n - 1; i >= 0; --i) {
    z[i] /= diag_[i];
    const double zi = z[i];
    for (int k = rp[i]; k < rp[i + 1] - 1; ++k) z[ci[k]] -= lv[k] * zi;
  }
}

PcgResult pcg_solve(const CsrMatrix &a, std::span<const double> b, const IcPreconditioner &m,
                    std::span<double> x, const PcgOptions &options,
                    std::vector<std::vector<double>> *iterates) {
  const int n = a.rows();
  PcgResult result;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }
  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * n;

  std::vector<double> r(n), z(n), p(n), ap(n);
  a.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double rnorm = norm2(r);
  if (iterates) iterates->emplace_back(x.begin(), x.end());
  if (rnorm <= options.rel_tol * bnorm) {
    result.relative_residual = rnorm / bnorm;
    result.converged = true;
    return result;
  }
  m.apply(r, z);
  p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= max_iter; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw SolverError("conjugate gradients: p^T A p <= 0, matrix is not positive definite");
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (iterates) iterates->emplace_back(x.begin(), x.end());
    rnorm = norm2(r);
    result.iterations = it;
    if (rnorm <= options.rel_tol * bnorm) {
      result.converged = true;
      break;
    }
    m.apply(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  result.relative_residual = rnorm / bnorm;
  return result;
}

}  // namespace rtstokes
