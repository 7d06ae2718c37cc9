#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sketchkit/fastembed.hpp"
#include "sketchkit/linalg.hpp"

namespace sketchkit {

struct Preconditioner {
  DenseMatrix r;  // d x rank; A R has (approximately) orthonormal columns
  double beta = 1.0;
  size_t rank = 0;
  bool probe_normalized = false;
  double probe_sigma_min = 0;
  double probe_sigma_max = 0;
};

struct PreconditionerOptions {
  bool allow_rank_deficient = false;
  size_t rank_hint = 0;  // subspace dimension for the embedding; 0 = n_cols
};

Preconditioner build_preconditioner(const CsrMatrix& a, double gamma, uint64_t seed,
                                    const PreconditionerOptions& opt = {});

// R from an already-sketched S A: S A = Q R^{-1}, or V_r Sigma_r^{-1} when
// rank deficient.
DenseMatrix preconditioner_from_sketch(const DenseMatrix& sa, bool allow_rank_deficient, size_t* rank = nullptr);

// Implicit n x d operator B: apply(G) = B G, apply_rows(idx, G) = B[idx] G.
struct ProductOperator {
  size_t rows = 0;
  size_t cols = 0;
  std::function<DenseMatrix(const DenseMatrix&)> apply;
  std::function<DenseMatrix(const std::vector<size_t>&, const DenseMatrix&)> apply_rows;
};

ProductOperator product_operator(const CsrMatrix& a, const DenseMatrix& r);

struct TwoStageConfig {
  double gamma = 0.5;
  double s = 1.0;
  uint64_t seed = 0;
};

struct LeverageSample {
  std::vector<size_t> indices;
  std::vector<double> probs;  // f_i per retained index
  double s_target = 0;
  size_t first_stage_count = 0;
  double sum_q = 0;
  double frob_estimate = 0;
  size_t validity_clamps = 0;

  std::vector<double> rescale() const;
};

// Throws DegenerateNorm when the Frobenius estimate vanishes.
LeverageSample two_stage_sample(const ProductOperator& op, const TwoStageConfig& cfg);
LeverageSample sample_from_product(const CsrMatrix& a, const DenseMatrix& r, const TwoStageConfig& cfg);

struct LeverageEmbedding {
  DenseMatrix s_lev_a;
  LeverageSample sample;
  Preconditioner precond;
};

struct LeverageOptions {
  bool allow_rank_deficient = false;
  size_t rank_hint = 0;
};

double leverage_sample_size(size_t k, double eps, double beta);

LeverageEmbedding leverage_embedding(const CsrMatrix& a, double eps, double gamma, uint64_t seed,
                                     const LeverageOptions& opt = {});

// Retained rows of a, scaled by 1/sqrt(f_i).
CsrMatrix sampled_rows(const CsrMatrix& a, const LeverageSample& sample);

OsnapSpec compression_spec(size_t rows_in, size_t k, double eps, uint64_t seed);
DenseMatrix compress_with_osnap(const DenseMatrix& s_lev_a, size_t k, double eps, uint64_t seed);

}  // namespace sketchkit
