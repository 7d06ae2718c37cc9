#include "sketchkit/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "sketchkit/error.hpp"

namespace sketchkit {

using ColMatrix = Eigen::MatrixXd;

CsrMatrix::CsrMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix CsrMatrix::from_triplets(size_t rows, size_t cols, std::vector<Triplet> entries) {
  // Counting sort by row, then sort and merge within each row.
  std::vector<size_t> start(rows + 1, 0);
  for (const auto& t : entries) {
    require(t.row < rows && t.col < cols, ErrorCode::DimMismatch, "triplet index out of range");
    start[t.row + 1]++;
  }
  for (size_t r = 0; r < rows; ++r) start[r + 1] += start[r];
  std::vector<std::pair<size_t, double>> bucket(entries.size());
  {
    std::vector<size_t> next(start.begin(), start.end() - 1);
    for (const auto& t : entries) bucket[next[t.row]++] = {t.col, t.value};
  }
  entries.clear();
  entries.shrink_to_fit();
  CsrMatrix m(rows, cols);
  m.col_idx_.reserve(bucket.size());
  m.values_.reserve(bucket.size());
  for (size_t r = 0; r < rows; ++r) {
    auto b = bucket.begin() + start[r], e = bucket.begin() + start[r + 1];
    std::sort(b, e, [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto it = b; it != e;) {
      size_t col = it->first;
      double sum = 0.0;
      while (it != e && it->first == col) sum += (it++)->second;
      require(std::isfinite(sum), ErrorCode::ParseError, "non-finite matrix entry");
      if (sum != 0.0) {
        m.col_idx_.push_back(col);
        m.values_.push_back(sum);
      }
    }
    m.row_ptr_[r + 1] = m.values_.size();
  }
  return m;
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& a) {
  CsrMatrix m(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      double v = a(i, j);
      if (v != 0.0) {
        m.col_idx_.push_back(j);
        m.values_.push_back(v);
      }
    }
    m.row_ptr_[i + 1] = m.values_.size();
  }
  return m;
}

CsrMatrix CsrMatrix::from_parts(size_t rows, size_t cols, std::vector<size_t> row_ptr,
                                std::vector<size_t> col_idx, std::vector<double> values) {
  require(row_ptr.size() == rows + 1 && row_ptr.front() == 0 && row_ptr.back() == col_idx.size() &&
              col_idx.size() == values.size(),
          ErrorCode::DimMismatch, "inconsistent CSR arrays");
  bool canonical = true;
  for (size_t r = 0; r < rows; ++r) {
    require(row_ptr[r] <= row_ptr[r + 1], ErrorCode::DimMismatch, "row_ptr must be nondecreasing");
    for (size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      require(col_idx[p] < cols, ErrorCode::DimMismatch, "column index out of range");
      if (values[p] == 0.0 || !std::isfinite(values[p]) || (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1]))
        canonical = false;
    }
  }
  if (canonical) {
    CsrMatrix m(rows, cols);
    m.row_ptr_ = std::move(row_ptr);
    m.col_idx_ = std::move(col_idx);
    m.values_ = std::move(values);
    return m;
  }
  std::vector<Triplet> t;
  t.reserve(values.size());
  for (size_t r = 0; r < rows; ++r)
    for (size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) t.push_back({r, col_idx[p], values[p]});
  return from_triplets(rows, cols, std::move(t));
}

CsrMatrix CsrMatrix::identity(size_t n) {
  CsrMatrix m(n, n);
  m.col_idx_.resize(n);
  m.values_.assign(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    m.col_idx_[i] = i;
    m.row_ptr_[i + 1] = i + 1;
  }
  return m;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
  for (size_t i = 0; i < rows_; ++i)
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t(cols_, rows_);
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  for (size_t c : col_idx_) t.row_ptr_[c + 1]++;
  for (size_t c = 0; c < cols_; ++c) t.row_ptr_[c + 1] += t.row_ptr_[c];
  std::vector<size_t> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (size_t i = 0; i < rows_; ++i) {
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      size_t q = next[col_idx_[p]]++;
      t.col_idx_[q] = i;
      t.values_[q] = values_[p];
    }
  }
  return t;
}

CsrMatrix CsrMatrix::select_rows(const std::vector<size_t>& rows) const {
  CsrMatrix m(rows.size(), cols_);
  for (size_t k = 0; k < rows.size(); ++k) {
    size_t i = rows[k];
    require(i < rows_, ErrorCode::DimMismatch, "row index out of range");
    m.col_idx_.insert(m.col_idx_.end(), col_idx_.begin() + row_ptr_[i], col_idx_.begin() + row_ptr_[i + 1]);
    m.values_.insert(m.values_.end(), values_.begin() + row_ptr_[i], values_.begin() + row_ptr_[i + 1]);
    m.row_ptr_[k + 1] = m.values_.size();
  }
  return m;
}

CsrMatrix CsrMatrix::scale_rows(const std::vector<double>& factors) const {
  require(factors.size() == rows_, ErrorCode::DimMismatch, "scale_rows: wrong factor count");
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (size_t i = 0; i < rows_; ++i)
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      t.push_back({i, col_idx_[p], values_[p] * factors[i]});
  return from_triplets(rows_, cols_, std::move(t));
}

DenseMatrix CsrMatrix::multiply(const DenseMatrix& b) const {
  require(static_cast<size_t>(b.rows()) == cols_, ErrorCode::DimMismatch, "csr * dense: inner dims");
  DenseMatrix out = DenseMatrix::Zero(rows_, b.cols());
  for (size_t i = 0; i < rows_; ++i)
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out.row(i) += values_[p] * b.row(col_idx_[p]);
  return out;
}

DenseMatrix CsrMatrix::transpose_multiply(const DenseMatrix& b) const {
  require(static_cast<size_t>(b.rows()) == rows_, ErrorCode::DimMismatch, "csr^T * dense: inner dims");
  DenseMatrix out = DenseMatrix::Zero(cols_, b.cols());
  for (size_t i = 0; i < rows_; ++i)
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out.row(col_idx_[p]) += values_[p] * b.row(i);
  return out;
}

Vector CsrMatrix::multiply(const Vector& x) const {
  require(static_cast<size_t>(x.size()) == cols_, ErrorCode::DimMismatch, "csr * vector: inner dims");
  Vector out = Vector::Zero(rows_);
  for (size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    out[i] = s;
  }
  return out;
}

double CsrMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double CsrMatrix::row_norm2(size_t i) const {
  double s = 0.0;
  for (size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * values_[p];
  return s;
}

double RankTolerance::resolve(size_t rows, size_t cols) const {
  if (rel_threshold > 0) return rel_threshold;
  return 1e-10 * static_cast<double>(std::max<size_t>({rows, cols, 1}));
}

namespace {

// Thin SVD of a column-major copy; Jacobi for small problems, divide and
// conquer otherwise.
void svd_impl(const ColMatrix& a, bool want_u, bool want_v, ColMatrix* u, Vector* s, ColMatrix* v) {
  unsigned opts = (want_u ? Eigen::ComputeThinU : 0) | (want_v ? Eigen::ComputeThinV : 0);
  if (std::min(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<ColMatrix> svd(a, opts);
    *s = svd.singularValues();
    if (want_u) *u = svd.matrixU();
    if (want_v) *v = svd.matrixV();
  } else {
    Eigen::BDCSVD<ColMatrix> svd(a, opts);
    *s = svd.singularValues();
    if (want_u) *u = svd.matrixU();
    if (want_v) *v = svd.matrixV();
    // BDCSVD in Eigen 3.4 occasionally returns NaNs on finite input.
    bool ok = s->allFinite() && (!want_u || u->allFinite()) && (!want_v || v->allFinite());
    if (!ok && a.allFinite()) {
      Eigen::JacobiSVD<ColMatrix> jac(a, opts);
      *s = jac.singularValues();
      if (want_u) *u = jac.matrixU();
      if (want_v) *v = jac.matrixV();
    }
  }
}

size_t count_above(const Vector& s, double rel) {
  if (s.size() == 0 || s[0] <= 0) return 0;
  size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel * s[0]) ++r;
  return r;
}

}  // namespace

SvdResult thin_svd(const DenseMatrix& a) {
  ColMatrix u, v;
  Vector s;
  svd_impl(a, true, true, &u, &s, &v);
  return {u, s, v.transpose()};
}

SvdResult truncated_svd(const DenseMatrix& a, size_t k) {
  size_t mn = std::min<size_t>(a.rows(), a.cols());
  require(k >= 1 && k <= mn, ErrorCode::BadRank, "truncated_svd: k out of range");
  SvdResult full = thin_svd(a);
  return {full.u.leftCols(k), full.singular_values.head(k), full.vt.topRows(k)};
}

Vector singular_values(const DenseMatrix& a) {
  if (a.size() == 0) return Vector();
  ColMatrix u, v;
  Vector s;
  svd_impl(a, false, false, &u, &s, &v);
  return s;
}

OrthoResult orthonormalize_columns(const DenseMatrix& a, const RankTolerance& tol) {
  require(a.rows() >= a.cols() && a.cols() > 0, ErrorCode::DimMismatch,
          "orthonormalize_columns: need n >= d >= 1");
  // V and Sigma are the eigenpairs of A^T A; taking them from an SVD of A
  // avoids squaring the condition number.
  ColMatrix u, v;
  Vector s;
  svd_impl(a, false, true, &u, &s, &v);
  double rel = tol.resolve(a.rows(), a.cols());
  require(s[0] > 0 && s[s.size() - 1] / s[0] >= rel, ErrorCode::RankDeficient,
          "orthonormalize_columns: matrix is rank deficient");
  // Rotating back by V^T gives the polar factors q = A (A^T A)^{-1/2} and
  // r_inv = (A^T A)^{1/2}, which do not depend on the SVD's sign or order.
  OrthoResult out;
  DenseMatrix av = a * v;
  out.q = av * s.cwiseInverse().asDiagonal() * v.transpose();
  out.r_inv = v * s.asDiagonal() * v.transpose();
  return out;
}

Vector exact_leverage_scores(const DenseMatrix& a, const RankTolerance& tol) {
  Vector scores = Vector::Zero(a.rows());
  if (a.size() == 0) return scores;
  ColMatrix u, v;
  Vector s;
  svd_impl(a, true, false, &u, &s, &v);
  size_t r = count_above(s, tol.resolve(a.rows(), a.cols()));
  if (r == 0) return scores;
  return u.leftCols(r).rowwise().squaredNorm();
}

Vector exact_leverage_scores(const CsrMatrix& a, const RankTolerance& tol) {
  return exact_leverage_scores(a.to_dense(), tol);
}

size_t numerical_rank(const DenseMatrix& a, const RankTolerance& tol) {
  if (a.size() == 0) return 0;
  return count_above(singular_values(a), tol.resolve(a.rows(), a.cols()));
}

size_t numerical_rank(const CsrMatrix& a, const RankTolerance& tol) {
  if (a.nnz() == 0) return 0;
  return numerical_rank(a.to_dense(), tol);
}

DenseMatrix orthonormal_basis(const DenseMatrix& a, const RankTolerance& tol) {
  if (a.size() == 0) return DenseMatrix(a.rows(), 0);
  ColMatrix u, v;
  Vector s;
  svd_impl(a, true, false, &u, &s, &v);
  size_t r = count_above(s, tol.resolve(a.rows(), a.cols()));
  return u.leftCols(r);
}

DenseMatrix pseudo_inverse(const DenseMatrix& a, const RankTolerance& tol) {
  if (a.size() == 0) return DenseMatrix::Zero(a.cols(), a.rows());
  ColMatrix u, v;
  Vector s;
  svd_impl(a, true, true, &u, &s, &v);
  size_t r = count_above(s, tol.resolve(a.rows(), a.cols()));
  return v.leftCols(r) * s.head(r).cwiseInverse().asDiagonal() * u.leftCols(r).transpose();
}

std::vector<size_t> independent_row_pivots(const DenseMatrix& a, size_t k, const RankTolerance& tol) {
  if (a.size() == 0 || k == 0) return {};
  ColMatrix at = a.transpose();
  Eigen::ColPivHouseholderQR<ColMatrix> qr(at);
  double rel = tol.resolve(a.rows(), a.cols());
  const auto& r = qr.matrixQR();
  double top = std::abs(r(0, 0));
  size_t limit = std::min<size_t>({k, static_cast<size_t>(a.rows()), static_cast<size_t>(a.cols())});
  std::vector<size_t> out;
  for (size_t i = 0; i < limit; ++i) {
    if (top == 0 || std::abs(r(i, i)) <= rel * top) break;
    out.push_back(qr.colsPermutation().indices()[i]);
  }
  return out;
}

double rank_k_residual2(const DenseMatrix& a, size_t k) {
  Vector s = singular_values(a);
  double tail = 0.0;
  for (Eigen::Index i = static_cast<Eigen::Index>(k); i < s.size(); ++i) tail += s[i] * s[i];
  return tail;
}

}  // namespace sketchkit
