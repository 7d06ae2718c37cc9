#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sketchkit/error.hpp"
#include "sketchkit/leverage.hpp"
#include "test_util.hpp"

using namespace sketchkit;
using sketchkit::testing::gaussian;
using sketchkit::testing::random_basis;

namespace {

// Exact leverage scores from Householder QR.
std::vector<double> exact_leverage(const DenseMatrix& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(a)};
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  std::vector<double> l(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) l[i] = q.row(i).squaredNorm();
  return l;
}

size_t col_nnz(const CsrMatrix& s, size_t j) {
  CsrMatrix t = s.transpose();
  return t.row_ptr()[j + 1] - t.row_ptr()[j];
}

}  // namespace

TEST(Leverage, OrthonormalInputHasSmallBeta) {
  CsrMatrix u = CsrMatrix::from_dense(random_basis(500, 8, 1));
  Preconditioner p = build_preconditioner(u, 0.5, 2);
  EXPECT_EQ(p.rank, 8u);
  EXPECT_TRUE(p.probe_normalized);
  EXPECT_GE(p.beta, 1.0);
  EXPECT_LE(p.beta, 3.0);
  DenseMatrix ar = u.to_dense() * p.r;
  Distortion d = sketchkit::testing::singular_bracket(ar);
  // Singular values of A R lie in [1/beta, 1].
  EXPECT_LE(d.sigma_max, 1 + 1e-9);
  EXPECT_GE(d.sigma_min, 1 / p.beta - 1e-9);
}

TEST(Leverage, RankDeficientRejected) {
  DenseMatrix a = gaussian(200, 4, 3);
  a.col(3) = a.col(0) + a.col(1);
  try {
    leverage_embedding(CsrMatrix::from_dense(a), 0.5, 0.5, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
  LeverageOptions opt;
  opt.allow_rank_deficient = true;
  EXPECT_EQ(leverage_embedding(CsrMatrix::from_dense(a), 0.5, 0.5, 4, opt).precond.rank, 3u);
}

TEST(Leverage, SingleNonzeroRow) {
  CsrMatrix a = CsrMatrix::from_triplets(50, 1, {{17, 0, 3.0}});
  LeverageEmbedding e = leverage_embedding(a, 0.5, 0.5, 5);
  ASSERT_EQ(e.sample.indices.size(), 1u);
  EXPECT_EQ(e.sample.indices[0], 17u);
  EXPECT_EQ(e.sample.probs[0], 1.0);
  EXPECT_NEAR(e.s_lev_a(0, 0), 3.0, 1e-12);
}

TEST(Leverage, ZeroProductIsDegenerate) {
  CsrMatrix a = CsrMatrix::from_dense(gaussian(40, 3, 6));
  try {
    sample_from_product(a, DenseMatrix::Zero(3, 3), TwoStageConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateNorm);
  }
}

TEST(Leverage, FrequencyBracket) {
  const size_t n = 500, d = 8;
  DenseMatrix a = gaussian(n, d, 7);
  for (size_t i = 0; i < 20; ++i) a.row(i) *= 6;
  std::vector<double> lev = exact_leverage(a);
  DenseMatrix r = preconditioner_from_sketch(a, false);
  CsrMatrix as = CsrMatrix::from_dense(a);
  const double s = 200;
  const int trials = 400;
  std::vector<int> hits(n, 0);
  for (int t = 0; t < trials; ++t) {
    LeverageSample smp = sample_from_product(as, r, TwoStageConfig{0.5, s, static_cast<uint64_t>(t)});
    EXPECT_LE(static_cast<double>(smp.first_stage_count), 4 * smp.sum_q + 10);
    for (size_t i : smp.indices) ++hits[i];
  }
  size_t checked = 0;
  for (size_t i = 0; i < n; ++i) {
    double p = std::min(1.0, s * lev[i] / (4 * static_cast<double>(d)));
    if (p < 0.05) continue;
    ++checked;
    double f = hits[i] / static_cast<double>(trials);
    EXPECT_GE(f, p / 3) << "row " << i;
    EXPECT_LE(f, std::min(1.0, 3 * p)) << "row " << i;
  }
  EXPECT_GT(checked, 100u);
}

TEST(Leverage, MatchesDirectBernoulliInTotalVariation) {
  const size_t n = 400, d = 6;
  DenseMatrix a = gaussian(n, d, 8);
  for (size_t i = 0; i < 10; ++i) a.row(i) *= 5;
  std::vector<double> lev = exact_leverage(a);
  DenseMatrix r = preconditioner_from_sketch(a, false);
  CsrMatrix as = CsrMatrix::from_dense(a);
  const double s = 120;
  const int trials = 4000;
  std::vector<double> hits(n, 0), exact(n, 0);
  double total = 0, exact_total = 0;
  for (size_t i = 0; i < n; ++i) exact_total += exact[i] = std::min(1.0, s * lev[i] / (4 * static_cast<double>(d)));
  for (int t = 0; t < trials; ++t) {
    LeverageSample smp = sample_from_product(as, r, TwoStageConfig{0.5, s, 5000 + static_cast<uint64_t>(t)});
    for (size_t i : smp.indices) ++hits[i], ++total;
  }
  double tv = 0;
  for (size_t i = 0; i < n; ++i) tv += std::abs(hits[i] / total - exact[i] / exact_total);
  EXPECT_LT(tv / 2, 0.05);
}

TEST(Leverage, CoherentRowIsKept) {
  DenseMatrix a = gaussian(600, 5, 10) * 0.01;
  a.row(123).setZero();
  a(123, 0) = 100;
  CsrMatrix as = CsrMatrix::from_dense(a);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    LeverageEmbedding e = leverage_embedding(as, 0.5, 0.5, seed);
    EXPECT_NE(std::find(e.sample.indices.begin(), e.sample.indices.end(), 123u), e.sample.indices.end());
  }
}

TEST(Leverage, RescaleIsInverseSqrtProbability) {
  LeverageSample s;
  s.indices = {1, 4};
  s.probs = {0.25, 1.0};
  std::vector<double> w = s.rescale();
  EXPECT_DOUBLE_EQ(w[0], 2.0);
  EXPECT_DOUBLE_EQ(w[1], 1.0);
}

TEST(Leverage, CompressionPassThroughAndSparsity) {
  const size_t k = 6;
  const double eps = 0.5;
  DenseMatrix small = gaussian(10, k, 11);
  EXPECT_EQ((compress_with_osnap(small, k, eps, 1) - small).cwiseAbs().maxCoeff(), 0.0);
  OsnapSpec spec = compression_spec(5000, k, eps, 12);
  size_t expect_s = static_cast<size_t>(std::ceil(2 * std::log(static_cast<double>(k)) / eps));
  EXPECT_EQ(spec.s, expect_s);
  CsrMatrix m = materialize(spec);
  for (size_t j : {0, 100, 4999}) EXPECT_EQ(col_nnz(m, j), expect_s);
  DenseMatrix big = gaussian(5000, k, 13);
  EXPECT_EQ(static_cast<size_t>(compress_with_osnap(big, k, eps, 12).rows()), spec.m);
}

TEST(Leverage, EmbeddingBracket) {
  DenseMatrix a = gaussian(3000, 6, 14);
  LeverageEmbedding e = leverage_embedding(CsrMatrix::from_dense(a), 0.5, 0.5, 15);
  Distortion d = sketchkit::testing::singular_bracket(e.s_lev_a * preconditioner_from_sketch(a, false));
  EXPECT_GE(d.sigma_min, 0.5);
  EXPECT_LE(d.sigma_max, 1.5);
}
