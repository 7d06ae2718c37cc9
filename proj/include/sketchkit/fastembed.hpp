#pragma once

#include <cstdint>
#include <string>

#include "sketchkit/flatten.hpp"
#include "sketchkit/sketches.hpp"

namespace sketchkit {

// Monte-Carlo scaling for the composed embedding, shared by all seeds with
// the same (n, k, gamma, constants).
struct FastEmbedCalibration {
  double kappa = 1.0;        // 1 / quantile(sigma_min)
  double d_cal = 1.0;        // calibrated upper distortion cap
  double q_sigma_min = 1.0;  // unscaled quantile of sigma_min
  double min_sigma_min = 1.0;
  double max_sigma_max = 1.0;
  size_t trials = 0;
};

struct FastEmbedSpec {
  size_t n = 0;
  size_t k = 0;
  double gamma = 0.5;
  uint64_t seed = 0;
  bool s1_identity = false;
  bool s2_identity = false;
  OsnapSpec s1;
  OsnapSpec s2;
  FlattenMap fmap;
  SparseSignSpec g;
  double large_fraction = 0;
  size_t g_max_row_nnz = 0;
  size_t g_max_col_nnz = 0;
  FastEmbedCalibration calibration;

  size_t rows() const { return g.m; }
  double kappa() const { return calibration.kappa; }
};

FastEmbedSpec build_fast_embed(size_t n, size_t k, double gamma, uint64_t seed);

// Same stages with kappa = 1 and no calibration pass.
FastEmbedSpec build_fast_embed_uncalibrated(size_t n, size_t k, double gamma, uint64_t seed);

const FastEmbedCalibration& calibrate_fast_embed(size_t n, size_t k, double gamma);

DenseMatrix fast_embed_apply(const FastEmbedSpec& spec, const CsrMatrix& a);
DenseMatrix fast_embed_apply(const FastEmbedSpec& spec, const DenseMatrix& a);

Distortion sparse_sign_distortion_check(const SparseSignSpec& g, const DenseMatrix& flat_basis);

struct FastEmbedStages {
  CsrMatrix s1;
  CsrMatrix s2;
  DenseMatrix flatten;
  CsrMatrix g;
  double kappa = 1.0;
};

// Explicit stage matrices; intended for small n.
FastEmbedStages materialize_stages(const FastEmbedSpec& spec);

std::string fast_embed_to_json(const FastEmbedSpec& spec);

}  // namespace sketchkit
