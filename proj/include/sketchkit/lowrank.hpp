#pragma once

#include <cstdint>
#include <vector>

#include "sketchkit/leverage.hpp"
#include "sketchkit/linalg.hpp"

namespace sketchkit {

struct LraFactors {
  DenseMatrix v;  // n x k, orthonormal columns
  DenseMatrix x;  // k x d
};

enum class SampleAxis { Rows, Columns };

struct ResidualSampleConfig {
  double s = 1.0;
  double alpha = 1.0 / 16.0;
  double gamma = 0.5;
  uint64_t seed = 0;
};

// Samples rows (columns) of a with probability tied to the squared norms of
// E = a - a U U^T (rows) or E = a - U U^T a (columns). U is d x j for rows
// and n x j for columns. Throws DegenerateResidual when ||E||_F is
// negligible.
LeverageSample residual_sample(const CsrMatrix& a, const DenseMatrix& u, const ResidualSampleConfig& cfg,
                               SampleAxis axis);

struct DualSetInput {
  DenseMatrix v_basis;   // r x k, orthonormal columns
  DenseMatrix residual;  // r x m
  size_t target = 0;     // number of barrier steps, 4k by default
};

struct DualSetResult {
  std::vector<size_t> indices;  // distinct selected rows, increasing
  std::vector<double> weights;  // per selected row
};

// Throws BarrierStuck when no row fits between the barriers.
DualSetResult dual_set_sparsify(const DualSetInput& input);

struct SketchedRegression {
  DenseMatrix x1;  // cols(M) x k
  DenseMatrix x2;  // k x t2
  size_t t1_rows = 0;
  size_t t2_cols = 0;
  bool t1_identity = false;
  bool t2_identity = false;
  uint64_t t1_seed = 0;
};

// min over rank-k X of ||T1 M X - T1 A T2||_F in closed form, X = x1 * x2.
SketchedRegression rank_k_sketched_regression(const DenseMatrix& m, const CsrMatrix& a, size_t k, double eps,
                                              uint64_t seed);

struct LeftFactorTrace {
  DenseMatrix u;  // basis of A T Omega
  size_t t_cols = 0;
  size_t s_rows = 0;
  size_t omega = 0;
  size_t column_sample = 0;
  size_t m_cols = 0;
};

DenseMatrix left_factor(const CsrMatrix& a, size_t k, double eps, double gamma, uint64_t seed,
                        LeftFactorTrace* trace = nullptr);

struct RightFactorTrace {
  size_t lev_rows = 0;
  size_t bss_rows = 0;
  size_t row_sample = 0;
  size_t r_rows = 0;
};

DenseMatrix right_factor(const CsrMatrix& a, const DenseMatrix& v, double eps, double gamma, uint64_t seed,
                         RightFactorTrace* trace = nullptr);

struct LraReport {
  LeftFactorTrace left;
  RightFactorTrace right;
  bool oracle = false;
  double opt = 0;
  double intermediate_ratio = 0;  // ||(I - U U^T) A||^2 / OPT
  double left_ratio = 0;          // ||A - V V^T A||^2 / OPT
  double final_ratio = 0;         // ||A - V X||^2 / OPT
};

struct LraResult {
  LraFactors factors;
  LraReport report;
};

LraResult low_rank(const CsrMatrix& a, size_t k, double eps, double gamma, uint64_t seed, bool oracle = false);

}  // namespace sketchkit
