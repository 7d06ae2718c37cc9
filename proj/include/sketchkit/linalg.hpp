#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace sketchkit {

using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Triplet {
  size_t row;
  size_t col;
  double value;
};

// Compressed sparse row matrix in canonical form: column indices strictly
// increasing within each row, duplicates summed, no stored zeros.
class CsrMatrix {
 public:
  CsrMatrix() : row_ptr_(1, 0) {}
  CsrMatrix(size_t rows, size_t cols);

  static CsrMatrix from_triplets(size_t rows, size_t cols, std::vector<Triplet> entries);
  static CsrMatrix from_dense(const DenseMatrix& a);
  static CsrMatrix from_parts(size_t rows, size_t cols, std::vector<size_t> row_ptr,
                              std::vector<size_t> col_idx, std::vector<double> values);
  static CsrMatrix identity(size_t n);

  size_t n_rows() const { return rows_; }
  size_t n_cols() const { return cols_; }
  size_t nnz() const { return values_.size(); }

  const std::vector<size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix to_dense() const;
  CsrMatrix transpose() const;
  CsrMatrix select_rows(const std::vector<size_t>& rows) const;
  CsrMatrix scale_rows(const std::vector<double>& factors) const;

  // this * b and this^T * b for dense b.
  DenseMatrix multiply(const DenseMatrix& b) const;
  DenseMatrix transpose_multiply(const DenseMatrix& b) const;
  Vector multiply(const Vector& x) const;

  double frobenius_norm() const;
  double row_norm2(size_t i) const;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<size_t> row_ptr_;
  std::vector<size_t> col_idx_;
  std::vector<double> values_;
};

struct SvdResult {
  DenseMatrix u;
  Vector singular_values;
  DenseMatrix vt;
};

// Relative singular-value cut. A value of 0 selects 1e-10 * max(rows, cols).
struct RankTolerance {
  double rel_threshold = 0.0;
  double resolve(size_t rows, size_t cols) const;
};

struct OrthoResult {
  DenseMatrix q;
  DenseMatrix r_inv;
};

// A = q * r_inv with orthonormal q, via V and Sigma of A^T A = V Sigma^2 V^T:
// q = A V Sigma^{-1} V^T, r_inv = V Sigma V^T (polar form).
OrthoResult orthonormalize_columns(const DenseMatrix& a, const RankTolerance& tol = {});

Vector exact_leverage_scores(const CsrMatrix& a, const RankTolerance& tol = {});
Vector exact_leverage_scores(const DenseMatrix& a, const RankTolerance& tol = {});

SvdResult thin_svd(const DenseMatrix& a);
SvdResult truncated_svd(const DenseMatrix& a, size_t k);
Vector singular_values(const DenseMatrix& a);

size_t numerical_rank(const CsrMatrix& a, const RankTolerance& tol = {});
size_t numerical_rank(const DenseMatrix& a, const RankTolerance& tol = {});

// Orthonormal basis of colspan(a), rank decided by tol.
DenseMatrix orthonormal_basis(const DenseMatrix& a, const RankTolerance& tol = {});
DenseMatrix pseudo_inverse(const DenseMatrix& a, const RankTolerance& tol = {});

// Indices of up to k linearly independent rows, by column-pivoted QR of a^T.
std::vector<size_t> independent_row_pivots(const DenseMatrix& a, size_t k,
                                           const RankTolerance& tol = {});

// Optimal rank-k Frobenius error ||a - [a]_k||_F^2.
double rank_k_residual2(const DenseMatrix& a, size_t k);

// Matrix Market I/O. Coordinate files load into CSR, array files into dense.
CsrMatrix read_matrix_market(const std::string& path);
CsrMatrix read_matrix_market(std::istream& in);
DenseMatrix read_matrix_market_dense(const std::string& path);
DenseMatrix read_matrix_market_dense(std::istream& in);
void write_matrix_market(const std::string& path, const CsrMatrix& a);
void write_matrix_market(std::ostream& out, const CsrMatrix& a);
void write_matrix_market_array(const std::string& path, const DenseMatrix& a);
void write_matrix_market_array(std::ostream& out, const DenseMatrix& a);

}  // namespace sketchkit
