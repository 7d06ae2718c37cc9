#include "sketchkit/rankalg.hpp"

#include <algorithm>
#include <cmath>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/leverage.hpp"
#include "sketchkit/rng.hpp"
#include "sketchkit/sketches.hpp"

namespace sketchkit {

namespace {

size_t rank_c() { return static_cast<size_t>(constants().rank_c); }

// S a T^T with independent rank-preserving S (z x n) and T (z x d).
struct Sketched {
  bool dense = false;
  CsrMatrix sparse;
  DenseMatrix full;
};

Sketched two_sided(const CsrMatrix& a, size_t z, uint64_t seed) {
  SketchSpec s = sample_rank_preserving(z, a.n_rows(), rank_c(), derive_seed(seed, 1));
  SketchSpec t = sample_rank_preserving(z, a.n_cols(), rank_c(), derive_seed(seed, 2));
  Sketched out;
  double cells = static_cast<double>(sketch_rows(s)) * static_cast<double>(a.n_cols());
  if (cells <= 4.0 * static_cast<double>(a.nnz())) {
    DenseMatrix sa = apply_sketch(s, a);
    out.full = apply_sketch(t, DenseMatrix(sa.transpose())).transpose();
    out.dense = true;
  } else {
    out.sparse = apply_sketch_right(t, apply_sketch_sparse(s, a));
  }
  return out;
}

DenseMatrix two_sided(const DenseMatrix& a, size_t z, uint64_t seed) {
  SketchSpec s = sample_rank_preserving(z, a.rows(), rank_c(), derive_seed(seed, 1));
  SketchSpec t = sample_rank_preserving(z, a.cols(), rank_c(), derive_seed(seed, 2));
  DenseMatrix sa = apply_sketch(s, a);
  return apply_sketch(t, DenseMatrix(sa.transpose())).transpose();
}

size_t ckl_rank_dense(const DenseMatrix& a, uint64_t seed) {
  size_t c = rank_c();
  size_t full = std::min<size_t>(a.rows(), a.cols());
  if (full == 0) return 0;
  for (size_t z = 2 * c, round = 0;; z *= 2, ++round) {
    if (z >= full) return numerical_rank(a);
    size_t r = numerical_rank(two_sided(a, z, derive_seed(seed, 0x636b6c, round)));
    if (r * c < z) return r;
  }
}


}  // namespace

size_t ckl_rank(const CsrMatrix& a, uint64_t seed) {
  if (a.nnz() == 0) return 0;
  size_t c = rank_c();
  size_t full = std::min(a.n_rows(), a.n_cols());
  if (4 * a.nnz() >= a.n_rows() * a.n_cols()) return ckl_rank_dense(a.to_dense(), seed);
  for (size_t z = 2 * c, round = 0;; z *= 2, ++round) {
    if (z >= full) return numerical_rank(a);
    Sketched m = two_sided(a, z, derive_seed(seed, 0x636b6c, round));
    size_t r = m.dense ? numerical_rank(m.full) : numerical_rank(m.sparse);
    if (r * c < z) return r;
  }
}

namespace {

size_t ckl_rank_of(const Sketched& m, uint64_t seed) {
  return m.dense ? ckl_rank_dense(m.full, seed) : ckl_rank(m.sparse, seed);
}

}  // namespace

size_t compute_rank(const CsrMatrix& a, uint64_t seed, RankTrace* trace) {
  const Constants& cs = constants();
  RankTrace tr;
  if (a.nnz() == 0) {
    if (trace) *trace = tr;
    return 0;
  }
  size_t c = rank_c();
  double logn = std::log(static_cast<double>(std::max<size_t>(a.n_rows(), 3)));
  size_t z = static_cast<size_t>(std::ceil(static_cast<double>(c) * std::sqrt(static_cast<double>(a.nnz()) / logn)));
  z = std::max<size_t>(z, 1);
  tr.z = z;

  auto one_run = [&](uint64_t s) {
    Sketched sar = two_sided(a, z, s);
    size_t k1 = ckl_rank_of(sar, derive_seed(s, 3));
    tr.k1 = std::max(tr.k1, k1);
    ++tr.runs;
    if (k1 * c < z) {
      tr.fast_path = true;
      return k1;
    }
    tr.fast_path = false;
    return ckl_rank(a, derive_seed(s, 4));
  };

  // Sketches only lose rank, so the max over independent runs is safe; a
  // disagreement is a detected failure and triggers more runs.
  size_t confirm = std::max<size_t>(1, static_cast<size_t>(cs.rank_confirm));
  size_t retries = static_cast<size_t>(cs.rank_retries);
  size_t best = 0;
  uint64_t run = 0;
  for (size_t attempt = 0; attempt <= retries; ++attempt) {
    std::vector<size_t> got;
    for (size_t i = 0; i < confirm; ++i) got.push_back(one_run(derive_seed(seed, 0x72616e6b, run++)));
    size_t hi = *std::max_element(got.begin(), got.end());
    size_t lo = *std::min_element(got.begin(), got.end());
    best = std::max(best, hi);
    if (lo == hi && hi == best) break;
    ++tr.disagreements;
  }
  if (trace) *trace = tr;
  return best;
}

RowReductionResult row_reduction(const CsrMatrix& a, size_t k, uint64_t seed, bool verify) {
  const Constants& cs = constants();
  size_t n = a.n_rows();
  require(k >= 1, ErrorCode::BadRank, "row_reduction needs k >= 1");
  RowReductionResult out;
  out.n_in = n;
  out.nnz_in = a.nnz();
  out.floor = static_cast<size_t>(cs.rank_floor_const * static_cast<double>(k * k));

  RankPreservingSpec s = sample_rank_preserving(rank_c() * k, n, rank_c(), seed);
  DenseMatrix sa = apply_sketch(s, a);
  std::vector<size_t> pivots = independent_row_pivots(sa, k);
  std::vector<char> chosen(s.z, 0);
  for (size_t p : pivots) chosen[p] = 1;

  for (size_t i = 0; i < n; ++i) {
    if (a.row_ptr()[i] == a.row_ptr()[i + 1]) continue;
    bool touch = s.identity ? chosen[i] : (chosen[s.row_a[i]] || (s.row_b[i] < s.z && chosen[s.row_b[i]]));
    if (touch) out.kept_rows.push_back(i);
  }
  out.sub = a.select_rows(out.kept_rows);
  if (verify) require(numerical_rank(out.sub) >= k, ErrorCode::RankLost, "row reduction lost rank");
  return out;
}

namespace {

struct Tracked {
  CsrMatrix m;
  std::vector<size_t> origin;  // original row index per row of m
};

void reduce(Tracked& t, size_t k, uint64_t seed, IndependentRowSet& stats) {
  RowReductionResult r = row_reduction(t.m, k, seed);
  std::vector<size_t> origin(r.kept_rows.size());
  for (size_t i = 0; i < origin.size(); ++i) origin[i] = t.origin[r.kept_rows[i]];
  t.origin.swap(origin);
  t.m = std::move(r.sub);
  r.sub = CsrMatrix();
  stats.reductions.push_back(std::move(r));
}

size_t loglog_count(double n) {
  double c = constants().rank_reduction_const;
  return static_cast<size_t>(std::ceil(c * std::log2(std::log2(std::max(n, 4.0))) - 1e-9));
}

std::vector<size_t> attempt_rows(const CsrMatrix& a, size_t k, uint64_t seed, IndependentRowSet& stats) {
  size_t c = rank_c();
  size_t n = a.n_rows();
  RankPreservingSpec s = sample_rank_preserving(c * k, a.n_cols(), c, derive_seed(seed, 1));
  Tracked t;
  t.m = apply_sketch_right(s, a);
  t.origin.resize(n);
  for (size_t i = 0; i < n; ++i) t.origin[i] = i;

  size_t first = loglog_count(static_cast<double>(n));
  // A k-row matrix of rank k is a fixed point of row reduction.
  for (size_t i = 0; i < first && t.m.n_rows() > k; ++i) reduce(t, k, derive_seed(seed, 2, i), stats);

  if (t.m.n_rows() > k) {
    LeverageOptions lo;
    lo.allow_rank_deficient = true;
    lo.rank_hint = k;
    double gamma = std::min(0.99, 1.0 / std::log(static_cast<double>(std::max<size_t>(n, 3))));
    LeverageEmbedding lev = leverage_embedding(t.m, 0.1, gamma, derive_seed(seed, 3), lo);
    std::vector<size_t> origin(lev.sample.indices.size());
    for (size_t i = 0; i < origin.size(); ++i) origin[i] = t.origin[lev.sample.indices[i]];
    t.origin.swap(origin);
    t.m = CsrMatrix::from_dense(lev.s_lev_a);
  }

  size_t second = loglog_count(static_cast<double>(std::max<size_t>(k, 4)));
  for (size_t i = 0; i < second && t.m.n_rows() > k; ++i) reduce(t, k, derive_seed(seed, 4, i), stats);

  std::vector<size_t> piv = independent_row_pivots(t.m.to_dense(), k);
  std::vector<size_t> rows(piv.size());
  for (size_t i = 0; i < piv.size(); ++i) rows[i] = t.origin[piv[i]];
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

IndependentRowSet independent_rows(const CsrMatrix& a, uint64_t seed, size_t retries) {
  IndependentRowSet out;
  out.rank = compute_rank(a, derive_seed(seed, 0x6b));
  if (out.rank == 0) return out;
  for (size_t attempt = 0; attempt <= retries; ++attempt) {
    ++out.attempts;
    std::vector<size_t> rows;
    try {
      rows = attempt_rows(a, out.rank, derive_seed(seed, 0x69, attempt), out);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient && e.code() != ErrorCode::RankLost) throw;
      continue;
    }
    if (rows.size() == out.rank && numerical_rank(a.select_rows(rows)) == out.rank) {
      out.rows = std::move(rows);
      return out;
    }
  }
  fail(ErrorCode::RankLost, "independent_rows: selected rows lost rank on every attempt");
}

}  // namespace sketchkit
