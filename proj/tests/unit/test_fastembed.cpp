#include <gtest/gtest.h>

#include <cmath>

#include "sketchkit/error.hpp"
#include "sketchkit/fastembed.hpp"
#include "test_util.hpp"

using namespace sketchkit;
using sketchkit::testing::gaussian;
using sketchkit::testing::random_basis;
using sketchkit::testing::singular_bracket;

TEST(FastEmbed, Dimensions) {
  for (size_t k : {4, 10, 16}) {
    FastEmbedSpec s = build_fast_embed_uncalibrated(2000, k, 0.5, 1);
    EXPECT_GE(s.rows(), k);
    EXPECT_LE(s.rows(), 64 * k);
    EXPECT_EQ(s.g.r, s.fmap.m_out);
    DenseMatrix out = fast_embed_apply(s, gaussian(2000, 3, 2));
    EXPECT_EQ(static_cast<size_t>(out.rows()), s.rows());
    EXPECT_EQ(out.cols(), 3);
  }
}

TEST(FastEmbed, SmallInputSkipsCompression) {
  FastEmbedSpec s = build_fast_embed_uncalibrated(20, 20, 0.5, 3);
  EXPECT_TRUE(s.s1_identity);
  EXPECT_TRUE(s.s2_identity);
  EXPECT_EQ(s.fmap.n_in, 20u);
}

TEST(FastEmbed, BadParams) {
  EXPECT_THROW(build_fast_embed_uncalibrated(10, 11, 0.5, 1), Error);
  EXPECT_THROW(build_fast_embed_uncalibrated(100, 4, 1.5, 1), Error);
  FastEmbedSpec s = build_fast_embed_uncalibrated(100, 4, 0.5, 1);
  try {
    fast_embed_apply(s, gaussian(99, 2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
  }
}

TEST(FastEmbed, ReproducibleJson) {
  EXPECT_EQ(fast_embed_to_json(build_fast_embed(1000, 6, 0.5, 7)), fast_embed_to_json(build_fast_embed(1000, 6, 0.5, 7)));
  EXPECT_NE(fast_embed_to_json(build_fast_embed(1000, 6, 0.5, 7)), fast_embed_to_json(build_fast_embed(1000, 6, 0.5, 8)));
}

TEST(FastEmbed, ZeroMapsToZero) {
  FastEmbedSpec s = build_fast_embed(500, 5, 0.5, 4);
  EXPECT_EQ(fast_embed_apply(s, DenseMatrix(DenseMatrix::Zero(500, 2))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FastEmbed, SparseMatchesDense) {
  FastEmbedSpec s = build_fast_embed(600, 5, 0.5, 5);
  DenseMatrix a = gaussian(600, 4, 6);
  EXPECT_LT((fast_embed_apply(s, a) - fast_embed_apply(s, CsrMatrix::from_dense(a))).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FastEmbed, SparseSignOnFlatBasis) {
  FastEmbedSpec base = build_fast_embed_uncalibrated(2000, 8, 0.5, 9);
  size_t r = base.fmap.m_out;
  DenseMatrix flat = random_basis(r, 8, 10);
  size_t ok = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SparseSignSpec g = base.g;
    g.seed = seed;
    ok += sparse_sign_distortion_check(g, flat).sigma_min >= 0.5;
  }
  EXPECT_GE(ok, 95u);
}

TEST(FastEmbed, StagesComposeAndAreBounded) {
  FastEmbedSpec s = build_fast_embed(300, 4, 0.5, 11);
  FastEmbedStages st = materialize_stages(s);
  DenseMatrix chain = st.kappa * (st.g.to_dense() * (st.flatten * (st.s2.to_dense() * st.s1.to_dense())));
  DenseMatrix a = gaussian(300, 3, 12);
  EXPECT_LT((chain * a - fast_embed_apply(s, a)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(singular_bracket(st.flatten).sigma_max, 1 + 1e-9);
  // A sparse sign matrix with at most c nonzeros per column and per row has norm <= scale * c.
  double cap = s.g.scale * static_cast<double>(std::max(s.g_max_row_nnz, s.g_max_col_nnz));
  EXPECT_LE(singular_bracket(st.g.to_dense()).sigma_max, cap);
}

TEST(FastEmbed, SecondMoment) {
  Vector x = gaussian(1500, 1, 13).col(0);
  x.normalize();
  double acc = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t)
    acc += fast_embed_apply(build_fast_embed_uncalibrated(1500, 6, 0.5, 1000 + t), DenseMatrix(x)).squaredNorm();
  acc /= trials;
  EXPECT_GE(acc, 0.3);
  EXPECT_LE(acc, 1.1);
}

TEST(FastEmbed, CalibrationIsCachedAndSane) {
  const FastEmbedCalibration& c1 = calibrate_fast_embed(800, 5, 0.5);
  const FastEmbedCalibration& c2 = calibrate_fast_embed(800, 5, 0.5);
  EXPECT_EQ(&c1, &c2);
  EXPECT_GT(c1.kappa, 0);
  EXPECT_LE(c1.min_sigma_min, c1.q_sigma_min);
  EXPECT_GE(c1.d_cal, c1.kappa * c1.max_sigma_max);
}
