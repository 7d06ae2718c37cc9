#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sketchkit/linalg.hpp"

namespace sketchkit {

// One +-1 nonzero per column: row h(j), sign sigma(j).
struct CountSketchSpec {
  size_t m = 0;
  size_t n = 0;
  uint64_t seed = 0;
};

// s distinct rows per column, values +-1/sqrt(s).
struct OsnapSpec {
  size_t m = 0;
  size_t n = 0;
  size_t s = 1;
  uint64_t seed = 0;
};

// Dense i.i.d. N(0, scale^2).
struct GaussianSpec {
  size_t m = 0;
  size_t n = 0;
  double scale = 1.0;
  uint64_t seed = 0;
};

// m x r, each entry 0 w.p. 1-p and +-scale w.p. p/2 each.
struct SparseSignSpec {
  size_t m = 0;
  size_t r = 0;
  double p = 1.0;
  double scale = 1.0;
  uint64_t seed = 0;
};

// z x n with at most two +-1 entries per column and at most ceil(2n/z) per
// row. Placements are fixed at sampling time.
struct RankPreservingSpec {
  size_t z = 0;
  size_t n = 0;
  size_t c = 11;
  uint64_t seed = 0;
  bool identity = false;
  std::vector<uint32_t> row_a;
  std::vector<uint32_t> row_b;  // == z when the column has a single entry
  std::vector<int8_t> sign_a;
  std::vector<int8_t> sign_b;
};

using SketchSpec = std::variant<CountSketchSpec, OsnapSpec, GaussianSpec, SparseSignSpec, RankPreservingSpec>;

size_t sketch_rows(const SketchSpec& spec);
size_t sketch_cols(const SketchSpec& spec);

// Nonzeros of column j of the implied matrix, appended to out as (row, value).
void sketch_column(const SketchSpec& spec, size_t j, std::vector<std::pair<size_t, double>>& out);

DenseMatrix apply_sketch(const SketchSpec& spec, const CsrMatrix& a);
DenseMatrix apply_sketch(const SketchSpec& spec, const DenseMatrix& a);
Vector apply_sketch(const SketchSpec& spec, const Vector& x);

// S a and a S^T kept sparse.
CsrMatrix apply_sketch_sparse(const SketchSpec& spec, const CsrMatrix& a);
CsrMatrix apply_sketch_right(const SketchSpec& spec, const CsrMatrix& a);

CsrMatrix materialize(const SketchSpec& spec);

RankPreservingSpec sample_rank_preserving(size_t z, size_t n, size_t c, uint64_t seed);

struct Distortion {
  double sigma_min = 0;
  double sigma_max = 0;
};

// Extreme singular values of an already-sketched orthonormal basis.
Distortion embedding_distortion(const DenseMatrix& sketched_basis);
Distortion embedding_distortion(const SketchSpec& spec, const DenseMatrix& basis);

std::string sketch_to_json(const SketchSpec& spec);
SketchSpec sketch_from_json(const std::string& text);

}  // namespace sketchkit
