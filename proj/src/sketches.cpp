#include "sketchkit/sketches.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {

namespace {

using Entries = std::vector<std::pair<size_t, double>>;

void column_entries(const CountSketchSpec& s, size_t j, Entries& out) {
  Stream st(s.seed, j);
  size_t row = st.below(s.m);
  out.emplace_back(row, st.sign());
}

// Floyd's algorithm for s distinct rows out of m, then sorted.
void column_entries(const OsnapSpec& s, size_t j, Entries& out) {
  Stream st(s.seed, j);
  size_t first = out.size();
  size_t cnt = std::min(s.s, s.m);
  double v = 1.0 / std::sqrt(static_cast<double>(cnt));
  for (size_t t = s.m - cnt; t < s.m; ++t) {
    size_t r = st.below(t + 1);
    bool seen = false;
    for (size_t q = first; q < out.size(); ++q)
      if (out[q].first == r) seen = true;
    out.emplace_back(seen ? t : r, 0.0);
  }
  std::sort(out.begin() + first, out.end());
  for (size_t q = first; q < out.size(); ++q) out[q].second = v * st.sign();
}

void column_entries(const GaussianSpec& s, size_t j, Entries& out) {
  Stream st(s.seed, j);
  for (size_t r = 0; r < s.m; ++r) out.emplace_back(r, s.scale * st.normal());
}

// Geometric skipping: the gap to the next nonzero is Geometric(p).
void column_entries(const SparseSignSpec& s, size_t j, Entries& out) {
  Stream st(s.seed, j);
  if (s.p >= 1.0) {
    for (size_t r = 0; r < s.m; ++r) out.emplace_back(r, s.scale * st.sign());
    return;
  }
  double lq = std::log1p(-s.p);
  double pos = -1.0;
  for (;;) {
    pos += 1.0 + std::floor(std::log(st.uniform_pos()) / lq);
    if (pos >= static_cast<double>(s.m)) break;
    out.emplace_back(static_cast<size_t>(pos), s.scale * st.sign());
  }
}

void column_entries(const RankPreservingSpec& s, size_t j, Entries& out) {
  if (s.identity) {
    out.emplace_back(j, 1.0);
    return;
  }
  out.emplace_back(s.row_a[j], s.sign_a[j]);
  if (s.row_b[j] < s.z) out.emplace_back(s.row_b[j], s.sign_b[j]);
}

}  // namespace

size_t sketch_rows(const SketchSpec& spec) {
  return std::visit(
      [](const auto& s) -> size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RankPreservingSpec>) return s.z;
        else return s.m;
      },
      spec);
}

size_t sketch_cols(const SketchSpec& spec) {
  return std::visit(
      [](const auto& s) -> size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SparseSignSpec>) return s.r;
        else return s.n;
      },
      spec);
}

void sketch_column(const SketchSpec& spec, size_t j, Entries& out) {
  std::visit([&](const auto& s) { column_entries(s, j, out); }, spec);
}

DenseMatrix apply_sketch(const SketchSpec& spec, const CsrMatrix& a) {
  size_t n = sketch_cols(spec);
  require(a.n_rows() == n, ErrorCode::DimMismatch, "apply_sketch: sketch width != matrix rows");
  DenseMatrix out = DenseMatrix::Zero(sketch_rows(spec), a.n_cols());
  Entries col;
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& vals = a.values();
  for (size_t i = 0; i < n; ++i) {
    if (rp[i] == rp[i + 1]) continue;
    col.clear();
    sketch_column(spec, i, col);
    for (const auto& [r, sv] : col) {
      double* dst = out.row(r).data();
      for (size_t p = rp[i]; p < rp[i + 1]; ++p) dst[ci[p]] += sv * vals[p];
    }
  }
  return out;
}

DenseMatrix apply_sketch(const SketchSpec& spec, const DenseMatrix& a) {
  size_t n = sketch_cols(spec);
  require(static_cast<size_t>(a.rows()) == n, ErrorCode::DimMismatch,
          "apply_sketch: sketch width != matrix rows");
  DenseMatrix out = DenseMatrix::Zero(sketch_rows(spec), a.cols());
  Entries col;
  for (size_t i = 0; i < n; ++i) {
    if (a.row(i).isZero(0.0)) continue;
    col.clear();
    sketch_column(spec, i, col);
    for (const auto& [r, sv] : col) out.row(r) += sv * a.row(i);
  }
  return out;
}

Vector apply_sketch(const SketchSpec& spec, const Vector& x) {
  size_t n = sketch_cols(spec);
  require(static_cast<size_t>(x.size()) == n, ErrorCode::DimMismatch, "apply_sketch: vector length");
  Vector out = Vector::Zero(sketch_rows(spec));
  Entries col;
  for (size_t i = 0; i < n; ++i) {
    if (x[i] == 0.0) continue;
    col.clear();
    sketch_column(spec, i, col);
    for (const auto& [r, sv] : col) out[r] += sv * x[i];
  }
  return out;
}

CsrMatrix apply_sketch_sparse(const SketchSpec& spec, const CsrMatrix& a) {
  size_t n = sketch_cols(spec);
  require(a.n_rows() == n, ErrorCode::DimMismatch, "apply_sketch_sparse: sketch width != matrix rows");
  std::vector<Triplet> t;
  t.reserve(a.nnz() * 2);
  Entries col;
  for (size_t i = 0; i < n; ++i) {
    if (a.row_ptr()[i] == a.row_ptr()[i + 1]) continue;
    col.clear();
    sketch_column(spec, i, col);
    for (const auto& [r, sv] : col)
      for (size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
        t.push_back({r, a.col_idx()[p], sv * a.values()[p]});
  }
  return CsrMatrix::from_triplets(sketch_rows(spec), a.n_cols(), std::move(t));
}

CsrMatrix apply_sketch_right(const SketchSpec& spec, const CsrMatrix& a) {
  size_t n = sketch_cols(spec), m = sketch_rows(spec);
  require(a.n_cols() == n, ErrorCode::DimMismatch, "apply_sketch_right: sketch width != matrix cols");
  // Columns of S as a CSR of S^T, then a row-wise sparse product a * S^T.
  CsrMatrix st = materialize(spec).transpose();
  std::vector<size_t> row_ptr(a.n_rows() + 1, 0), col_idx;
  std::vector<double> values, acc(m, 0.0);
  std::vector<char> used(m, 0);
  std::vector<size_t> touched;
  col_idx.reserve(a.nnz());
  values.reserve(a.nnz());
  for (size_t i = 0; i < a.n_rows(); ++i) {
    touched.clear();
    for (size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
      size_t j = a.col_idx()[p];
      for (size_t q = st.row_ptr()[j]; q < st.row_ptr()[j + 1]; ++q) {
        size_t r = st.col_idx()[q];
        if (!used[r]) {
          used[r] = 1;
          touched.push_back(r);
        }
        acc[r] += a.values()[p] * st.values()[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (size_t r : touched) {
      if (acc[r] != 0.0) {
        col_idx.push_back(r);
        values.push_back(acc[r]);
      }
      acc[r] = 0.0;
      used[r] = 0;
    }
    row_ptr[i + 1] = values.size();
  }
  return CsrMatrix::from_parts(a.n_rows(), m, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrMatrix materialize(const SketchSpec& spec) {
  std::vector<Triplet> t;
  Entries col;
  for (size_t j = 0; j < sketch_cols(spec); ++j) {
    col.clear();
    sketch_column(spec, j, col);
    for (const auto& [r, v] : col) t.push_back({r, j, v});
  }
  return CsrMatrix::from_triplets(sketch_rows(spec), sketch_cols(spec), std::move(t));
}

RankPreservingSpec sample_rank_preserving(size_t z, size_t n, size_t c, uint64_t seed) {
  require(z >= 1, ErrorCode::BadParams, "rank-preserving sketch needs z >= 1");
  RankPreservingSpec s;
  s.c = c;
  s.seed = seed;
  s.n = n;
  if (z >= n) {
    s.z = n;
    s.identity = true;
    return s;
  }
  s.z = z;
  s.row_a.resize(n);
  s.row_b.assign(n, static_cast<uint32_t>(z));
  s.sign_a.resize(n);
  s.sign_b.resize(n);
  Stream st(seed, 0x72616e6bULL);
  if (z == 1) {
    for (size_t j = 0; j < n; ++j) {
      s.row_a[j] = 0;
      s.sign_a[j] = static_cast<int8_t>(st.sign());
    }
    return s;
  }
  // Slot u sits in row u mod z, so every row holds floor or ceil of 2n/z
  // slots; a random permutation deals two slots to each column.
  std::vector<uint32_t> slot(2 * n);
  std::iota(slot.begin(), slot.end(), 0u);
  std::shuffle(slot.begin(), slot.end(), st);
  auto row_of = [&](size_t pos) { return slot[pos] % z; };
  for (size_t j = 0; j < n; ++j) {
    size_t guard = 0;
    while (row_of(2 * j) == row_of(2 * j + 1)) {
      size_t other = st.below(2 * n);
      size_t mate = other ^ 1;
      if (other / 2 == j) continue;
      // Swap slot 2j+1 with `other` if neither column ends up colliding.
      if (row_of(other) != row_of(2 * j) && row_of(2 * j + 1) != row_of(mate))
        std::swap(slot[2 * j + 1], slot[other]);
      require(++guard < 1000000, ErrorCode::Internal, "rank-preserving placement did not settle");
    }
  }
  for (size_t j = 0; j < n; ++j) {
    s.row_a[j] = row_of(2 * j);
    s.row_b[j] = row_of(2 * j + 1);
    s.sign_a[j] = static_cast<int8_t>(st.sign());
    s.sign_b[j] = static_cast<int8_t>(st.sign());
  }
  return s;
}

Distortion embedding_distortion(const DenseMatrix& sketched_basis) {
  Vector s = singular_values(sketched_basis);
  if (s.size() == 0) return {};
  if (sketched_basis.rows() < sketched_basis.cols()) return {0.0, s[0]};
  return {s[s.size() - 1], s[0]};
}

Distortion embedding_distortion(const SketchSpec& spec, const DenseMatrix& basis) {
  return embedding_distortion(apply_sketch(spec, basis));
}

std::string sketch_to_json(const SketchSpec& spec) {
  nlohmann::json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CountSketchSpec>) {
          j = {{"type", "countsketch"}, {"m", s.m}, {"n", s.n}, {"seed", s.seed}};
        } else if constexpr (std::is_same_v<T, OsnapSpec>) {
          j = {{"type", "osnap"}, {"m", s.m}, {"n", s.n}, {"s", s.s}, {"seed", s.seed}};
        } else if constexpr (std::is_same_v<T, GaussianSpec>) {
          j = {{"type", "gaussian"}, {"m", s.m}, {"n", s.n}, {"scale", s.scale}, {"seed", s.seed}};
        } else if constexpr (std::is_same_v<T, SparseSignSpec>) {
          j = {{"type", "sparse_sign"}, {"m", s.m},         {"r", s.r},
               {"p", s.p},              {"scale", s.scale}, {"seed", s.seed}};
        } else {
          j = {{"type", "rank_preserving"}, {"z", s.identity ? s.n : s.z}, {"n", s.n}, {"c", s.c},
               {"seed", s.seed}};
        }
      },
      spec);
  return j.dump();
}

SketchSpec sketch_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    std::string type = j.at("type");
    if (type == "countsketch") return CountSketchSpec{j.at("m"), j.at("n"), j.at("seed")};
    if (type == "osnap") return OsnapSpec{j.at("m"), j.at("n"), j.at("s"), j.at("seed")};
    if (type == "gaussian") return GaussianSpec{j.at("m"), j.at("n"), j.at("scale"), j.at("seed")};
    if (type == "sparse_sign")
      return SparseSignSpec{j.at("m"), j.at("r"), j.at("p"), j.at("scale"), j.at("seed")};
    if (type == "rank_preserving")
      return sample_rank_preserving(j.at("z"), j.at("n"), j.at("c"), j.at("seed"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("sketch descriptor: ") + e.what());
  }
  fail(ErrorCode::ParseError, "unknown sketch type");
}

}  // namespace sketchkit
