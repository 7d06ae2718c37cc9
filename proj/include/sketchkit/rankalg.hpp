#pragma once

#include <cstdint>
#include <vector>

#include "sketchkit/linalg.hpp"

namespace sketchkit {

// Rank of a via two-sided rank-preserving sketches with doubling size
// z = 2c, 4c, ... until the sketched rank is below z/c.
size_t ckl_rank(const CsrMatrix& a, uint64_t seed = 0);

struct RankTrace {
  bool fast_path = false;
  size_t z = 0;
  size_t k1 = 0;
  size_t runs = 0;
  size_t disagreements = 0;
};

size_t compute_rank(const CsrMatrix& a, uint64_t seed = 0, RankTrace* trace = nullptr);

struct RowReductionResult {
  std::vector<size_t> kept_rows;  // indices into the input, increasing
  CsrMatrix sub;
  size_t n_in = 0;
  size_t nnz_in = 0;
  size_t floor = 0;  // nnz floor rank_floor_const * k^2
};

// Throws RankLost when verify is set and rank(sub) < k.
RowReductionResult row_reduction(const CsrMatrix& a, size_t k, uint64_t seed, bool verify = false);

struct IndependentRowSet {
  std::vector<size_t> rows;
  size_t rank = 0;
  size_t attempts = 0;
  std::vector<RowReductionResult> reductions;  // matrices dropped, stats kept
};

// Throws RankLost when every attempt fails verification.
IndependentRowSet independent_rows(const CsrMatrix& a, uint64_t seed, size_t retries = 0);

}  // namespace sketchkit
