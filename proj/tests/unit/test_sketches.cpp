#include <gtest/gtest.h>

#include <cmath>

#include "sketchkit/error.hpp"
#include "sketchkit/sketches.hpp"
#include "test_util.hpp"

using namespace sketchkit;
using sketchkit::testing::gaussian;
using sketchkit::testing::random_basis;

namespace {

size_t max_col_nnz(const CsrMatrix& s) {
  CsrMatrix t = s.transpose();
  size_t best = 0;
  for (size_t j = 0; j < t.n_rows(); ++j) best = std::max(best, t.row_ptr()[j + 1] - t.row_ptr()[j]);
  return best;
}

size_t max_row_nnz(const CsrMatrix& s) {
  size_t best = 0;
  for (size_t i = 0; i < s.n_rows(); ++i) best = std::max(best, s.row_ptr()[i + 1] - s.row_ptr()[i]);
  return best;
}

}  // namespace

TEST(Sketches, CountSketchIdentitySeed) {
  // Search for a seed whose hash is the identity with all signs +1.
  const size_t n = 3;
  uint64_t seed = 0;
  for (; seed < 100000; ++seed) {
    DenseMatrix s = materialize(CountSketchSpec{n, n, seed}).to_dense();
    if ((s - DenseMatrix::Identity(n, n)).norm() == 0) break;
  }
  ASSERT_LT(seed, 100000u);
  DenseMatrix a = gaussian(n, 4, 1);
  DenseMatrix out = apply_sketch(CountSketchSpec{n, n, seed}, CsrMatrix::from_dense(a));
  EXPECT_EQ((out - a).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sketches, ApplyMatchesMaterializedProduct) {
  CsrMatrix a = CsrMatrix::from_dense(gaussian(60, 5, 2));
  std::vector<SketchSpec> specs = {CountSketchSpec{20, 60, 3}, OsnapSpec{20, 60, 3, 4}, GaussianSpec{20, 60, 0.2, 5},
                                   SparseSignSpec{20, 60, 0.3, 1.5, 6}, sample_rank_preserving(22, 60, 11, 7)};
  for (const auto& spec : specs) {
    DenseMatrix explicit_product = materialize(spec).multiply(a.to_dense());
    EXPECT_LT((apply_sketch(spec, a) - explicit_product).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((apply_sketch_sparse(spec, a).to_dense() - explicit_product).cwiseAbs().maxCoeff(), 1e-12);
    CsrMatrix at = a.transpose();
    DenseMatrix right = at.to_dense() * materialize(spec).to_dense().transpose();
    EXPECT_LT((apply_sketch_right(spec, at).to_dense() - right).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sketches, OsnapColumnStructure) {
  OsnapSpec spec{50, 10, 2, 8};
  Vector e = Vector::Zero(10);
  e[3] = 1;
  Vector out = apply_sketch(spec, e);
  size_t nz = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (out[i] != 0) {
      ++nz;
      EXPECT_NEAR(std::abs(out[i]), 1 / std::sqrt(2.0), 1e-15);
    }
  EXPECT_EQ(nz, 2u);
}

TEST(Sketches, SparsityCaps) {
  EXPECT_EQ(max_col_nnz(materialize(CountSketchSpec{30, 200, 1})), 1u);
  CsrMatrix os = materialize(OsnapSpec{30, 200, 4, 1});
  CsrMatrix ost = os.transpose();
  for (size_t j = 0; j < 200; ++j) EXPECT_EQ(ost.row_ptr()[j + 1] - ost.row_ptr()[j], 4u);
  for (size_t z : {7, 44, 100}) {
    CsrMatrix rp = materialize(sample_rank_preserving(z, 300, 11, z));
    EXPECT_LE(max_col_nnz(rp), 2u);
    EXPECT_LE(max_row_nnz(rp), (2 * 300 + z - 1) / z);
  }
}

TEST(Sketches, GaussianEmbedsOrthonormalBasis) {
  DenseMatrix u = random_basis(1000, 10, 9);
  Distortion d = embedding_distortion(GaussianSpec{200, 1000, 1 / std::sqrt(200.0), 10}, u);
  EXPECT_GE(d.sigma_min, 0.5);
  EXPECT_LE(d.sigma_max, 1.5);
}

TEST(Sketches, RankPreservingIdentityWhenWide) {
  RankPreservingSpec s = sample_rank_preserving(80, 50, 11, 3);
  EXPECT_TRUE(s.identity);
  CsrMatrix a = CsrMatrix::from_dense(gaussian(50, 6, 4));
  EXPECT_EQ((apply_sketch(s, a) - a.to_dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sketches, RankPreservingKeepsSmallRank) {
  CsrMatrix id = CsrMatrix::identity(100);
  size_t failures = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    DenseMatrix sa = apply_sketch(sample_rank_preserving(44, 100, 11, seed), id);
    if (std::min<size_t>(numerical_rank(sa), 4) != 4) ++failures;
  }
  EXPECT_LT(failures, 5u);
}

TEST(Sketches, DistortionOfScaledIdentity) {
  DenseMatrix i = DenseMatrix::Identity(5, 5);
  Distortion d1 = embedding_distortion(i);
  EXPECT_NEAR(d1.sigma_min, 1, 1e-12);
  EXPECT_NEAR(d1.sigma_max, 1, 1e-12);
  Distortion d2 = embedding_distortion(DenseMatrix(2 * i));
  EXPECT_NEAR(d2.sigma_min, 2, 1e-12);
  EXPECT_NEAR(d2.sigma_max, 2, 1e-12);
}

TEST(Sketches, OsnapSubspaceEmbedding) {
  const size_t k = 16, n = 2000;
  size_t m = static_cast<size_t>(std::ceil(4 * k * std::log(static_cast<double>(k))));
  size_t ok = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    DenseMatrix u = random_basis(n, k, 100 + seed);
    Distortion d = embedding_distortion(OsnapSpec{m, n, 4, seed}, u);
    ok += d.sigma_min >= 0.5 && d.sigma_max <= 1.5;
  }
  EXPECT_GE(ok, 95u);
}

TEST(Sketches, Unbiasedness) {
  Vector x = gaussian(40, 1, 11).col(0);
  double x2 = x.squaredNorm();
  const int trials = 1000;
  auto mean_ratio = [&](auto make, double factor) {
    double acc = 0;
    for (int t = 0; t < trials; ++t) acc += apply_sketch(make(static_cast<uint64_t>(t)), x).squaredNorm();
    return acc / trials / factor / x2;
  };
  EXPECT_NEAR(mean_ratio([](uint64_t s) { return SketchSpec(CountSketchSpec{10, 40, s}); }, 1.0), 1.0, 0.05);
  EXPECT_NEAR(mean_ratio([](uint64_t s) { return SketchSpec(OsnapSpec{10, 40, 3, s}); }, 1.0), 1.0, 0.05);
  const size_t m = 30;
  const double p = 0.2, scale = 0.7;
  EXPECT_NEAR(mean_ratio([&](uint64_t s) { return SketchSpec(SparseSignSpec{m, 40, p, scale, s}); },
                         static_cast<double>(m) * p * scale * scale),
              1.0, 0.05);
}

TEST(Sketches, Deterministic) {
  CsrMatrix a = CsrMatrix::from_dense(gaussian(80, 4, 12));
  SketchSpec spec = OsnapSpec{16, 80, 3, 99};
  DenseMatrix x = apply_sketch(spec, a), y = apply_sketch(spec, a);
  EXPECT_EQ((x - y).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sketches, JsonRoundTrip) {
  std::vector<SketchSpec> specs = {CountSketchSpec{5, 9, 1}, OsnapSpec{6, 9, 2, 2}, GaussianSpec{4, 9, 0.5, 3},
                                   SparseSignSpec{4, 9, 0.25, 2.0, 4}, sample_rank_preserving(4, 9, 11, 5)};
  for (const auto& spec : specs) {
    SketchSpec back = sketch_from_json(sketch_to_json(spec));
    EXPECT_EQ(sketch_to_json(back), sketch_to_json(spec));
    EXPECT_EQ((materialize(back).to_dense() - materialize(spec).to_dense()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Sketches, DimensionMismatch) {
  CsrMatrix a = CsrMatrix::from_dense(gaussian(10, 2, 13));
  try {
    apply_sketch(CountSketchSpec{4, 11, 1}, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}
