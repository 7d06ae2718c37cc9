#pragma once

#include <cstdint>
#include <vector>

#include "sketchkit/linalg.hpp"

namespace sketchkit {

struct RegressionProblem {
  CsrMatrix a;
  Vector b;
  double eps = 0.1;
  double gamma = 0.5;
  uint64_t seed = 0;
};

struct GdState {
  Vector x;
  double residual_norm = 0;
  size_t iteration = 0;
  double step = 0;
};

// One gradient step on 0.5 * ||M x - b||^2.
GdState gd_step(const GdState& state, const DenseMatrix& m, const Vector& b);

// Step 2 / (sigma_max^2 + sigma_min^2) from power iteration on M^T M.
double gd_step_size(const DenseMatrix& m, size_t power_iters, uint64_t seed);

// Minimizer of ||(S A R) x - S b|| when S A R has orthonormal columns.
Vector warm_start(const DenseMatrix& sa_r, const Vector& sb);

struct RegressionReport {
  size_t iterations = 0;
  double step = 0;
  double warm_start_residual = 0;  // sketched
  double sketched_residual = 0;
  double cond_sar = 0;  // condition number of the sampled, preconditioned matrix
  double d_cal = 0;
  size_t sample_rows = 0;
  size_t max_iters = 0;
  std::vector<double> residual_history;
};

struct RegressionResult {
  Vector x;
  RegressionReport report;
};

// Throws NoConvergence past max_iters, RankDeficient for rank-deficient A.
RegressionResult solve_regression(const RegressionProblem& prob);

// min_x ||A x - b|| by dense normal equations; test and CLI oracle.
Vector regression_oracle(const CsrMatrix& a, const Vector& b);

}  // namespace sketchkit
