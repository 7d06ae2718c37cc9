#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "json.hpp"
#include "sketchkit/sketchkit.h"

namespace {

using json = nlohmann::json;

json take_report(char* r) {
  json j = json::parse(r);
  sk_string_free(r);
  return j;
}

sk_matrix* identity(size_t n) {
  std::vector<size_t> idx(n);
  std::vector<double> ones(n, 1.0);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  sk_matrix* m = nullptr;
  EXPECT_EQ(sk_matrix_from_triplets(n, n, n, idx.data(), idx.data(), ones.data(), &m), SK_OK);
  return m;
}

std::string temp_path(const char* name) { return ::testing::TempDir() + name; }

}  // namespace

TEST(CApi, VersionAndErrorNames) {
  EXPECT_NE(std::string(sk_version()), "");
  EXPECT_STREQ(sk_error_name(SK_OK), "Ok");
  EXPECT_STREQ(sk_error_name(SK_ERR_USAGE), "UsageError");
  EXPECT_STREQ(sk_error_name(SK_ERR_RANK_COLLAPSE), "RankCollapse");
  EXPECT_STREQ(sk_error_name(SK_ERR_DIM_MISMATCH), "DimMismatch");
}

TEST(CApi, MatrixHandles) {
  sk_matrix* m = identity(5);
  size_t r = 0, c = 0, nnz = 0;
  ASSERT_EQ(sk_matrix_shape(m, &r, &c, &nnz), SK_OK);
  EXPECT_EQ(r, 5u);
  EXPECT_EQ(c, 5u);
  EXPECT_EQ(nnz, 5u);
  std::string path = temp_path("capi_i5.mtx");
  ASSERT_EQ(sk_matrix_write_mm(m, path.c_str()), SK_OK);
  sk_matrix* back = nullptr;
  ASSERT_EQ(sk_matrix_read_mm(path.c_str(), &back), SK_OK);
  ASSERT_EQ(sk_matrix_shape(back, &r, &c, &nnz), SK_OK);
  EXPECT_EQ(nnz, 5u);
  sk_matrix_free(back);
  sk_matrix_free(m);
  sk_matrix_free(nullptr);
}

TEST(CApi, RandomMatrixHasRequestedNnz) {
  sk_matrix* m = nullptr;
  ASSERT_EQ(sk_matrix_random(1000, 20, 4000, 3, &m), SK_OK);
  size_t r, c, nnz;
  sk_matrix_shape(m, &r, &c, &nnz);
  EXPECT_EQ(nnz, 4000u);
  sk_matrix_free(m);
}

TEST(CApi, DenseHandlesAreRowMajor) {
  const double data[6] = {1, 2, 3, 4, 5, 6};
  sk_dense* d = nullptr;
  ASSERT_EQ(sk_dense_create(2, 3, data, &d), SK_OK);
  size_t r, c;
  sk_dense_shape(d, &r, &c);
  EXPECT_EQ(r, 2u);
  EXPECT_EQ(c, 3u);
  EXPECT_EQ(sk_dense_data(d)[1], 2.0);
  EXPECT_EQ(sk_dense_data(d)[3], 4.0);
  std::string path = temp_path("capi_dense.mtx");
  ASSERT_EQ(sk_dense_write_mm(d, path.c_str()), SK_OK);
  sk_dense* back = nullptr;
  ASSERT_EQ(sk_dense_read_mm(path.c_str(), &back), SK_OK);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(sk_dense_data(back)[i], data[i]);
  sk_dense_free(back);
  sk_dense_free(d);
}

TEST(CApi, ErrorCodesAndLastError) {
  sk_matrix* m = nullptr;
  EXPECT_EQ(sk_matrix_read_mm("/nonexistent/file.mtx", &m), SK_ERR_IO);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(sk_last_error()), "");
  std::string bad = temp_path("capi_bad.mtx");
  FILE* f = std::fopen(bad.c_str(), "w");
  std::fputs("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", f);
  std::fclose(f);
  EXPECT_EQ(sk_matrix_read_mm(bad.c_str(), &m), SK_ERR_PARSE);
  size_t ri[1] = {3}, ci[1] = {0};
  double v[1] = {1};
  EXPECT_EQ(sk_matrix_from_triplets(2, 2, 1, ri, ci, v, &m), SK_ERR_DIM_MISMATCH);
  EXPECT_EQ(sk_set_constant("nope", 1), SK_ERR_BAD_PARAMS);
  EXPECT_NE(std::string(sk_last_error()).find("nope"), std::string::npos);
}

TEST(CApi, NullArguments) {
  size_t r;
  EXPECT_EQ(sk_matrix_read_mm(nullptr, nullptr), SK_ERR_BAD_PARAMS);
  EXPECT_EQ(sk_matrix_shape(nullptr, &r, &r, &r), SK_ERR_BAD_PARAMS);
  EXPECT_EQ(sk_compute_rank(nullptr, 0, 0, &r, nullptr), SK_ERR_BAD_PARAMS);
  sk_matrix* m = identity(4);
  // Outputs are optional.
  EXPECT_EQ(sk_compute_rank(m, 0, 0, nullptr, nullptr), SK_OK);
  EXPECT_EQ(sk_dense_data(nullptr), nullptr);
  sk_matrix_free(m);
}

TEST(CApi, Constants) {
  sk_reset_constants();
  double v = 0;
  ASSERT_EQ(sk_get_constant("rank_c", &v), SK_OK);
  EXPECT_EQ(v, 11);
  EXPECT_EQ(sk_set_constant("rank_c", 13), SK_OK);
  char* js = nullptr;
  ASSERT_EQ(sk_constants_json(&js), SK_OK);
  EXPECT_EQ(take_report(js)["rank_c"], 13);
  EXPECT_EQ(sk_set_constant("rank_c", -1), SK_ERR_BAD_PARAMS);
  sk_reset_constants();
  sk_get_constant("rank_c", &v);
  EXPECT_EQ(v, 11);
}

TEST(CApi, RankReport) {
  sk_matrix* m = identity(5);
  size_t rank = 0;
  char* rep = nullptr;
  ASSERT_EQ(sk_compute_rank(m, 1, 1, &rank, &rep), SK_OK);
  EXPECT_EQ(rank, 5u);
  json j = take_report(rep);
  EXPECT_TRUE(j["stages"].is_array());
  EXPECT_TRUE(j["oracle"]["match"].get<bool>());
  ASSERT_EQ(sk_compute_rank(m, 1, 0, &rank, nullptr), SK_OK);
  sk_matrix_free(m);
}

TEST(CApi, IndependentRows) {
  sk_matrix* m = identity(12);
  size_t* rows = nullptr;
  size_t count = 0;
  char* rep = nullptr;
  ASSERT_EQ(sk_independent_rows(m, 2, 3, 1, &rows, &count, &rep), SK_OK);
  ASSERT_EQ(count, 12u);
  for (size_t i = 0; i < count; ++i) EXPECT_EQ(rows[i], i);
  EXPECT_TRUE(take_report(rep)["oracle"]["verified"].get<bool>());
  sk_free(rows);
  sk_matrix_free(m);
}

TEST(CApi, EmbedAndLeverage) {
  sk_matrix* a = nullptr;
  ASSERT_EQ(sk_matrix_random(1500, 8, 6000, 4, &a), SK_OK);
  sk_dense* sa = nullptr;
  char* rep = nullptr;
  ASSERT_EQ(sk_fast_embed(a, 8, 0.5, 5, 1, &sa, &rep), SK_OK);
  size_t r, c;
  sk_dense_shape(sa, &r, &c);
  EXPECT_EQ(c, 8u);
  json j = take_report(rep);
  EXPECT_TRUE(j["oracle"].contains("within_bracket"));
  sk_dense_free(sa);
  ASSERT_EQ(sk_leverage_embedding(a, 0.5, 0.5, 6, 1, &sa, &rep), SK_OK);
  j = take_report(rep);
  EXPECT_TRUE(j["oracle"].contains("within_bracket"));
  EXPECT_GE(j["stages"].size(), 1u);
  sk_dense_free(sa);
  EXPECT_EQ(sk_fast_embed(a, 0, 1.5, 5, 0, &sa, nullptr), SK_ERR_BAD_PARAMS);
  ASSERT_EQ(sk_fast_embed(a, 0, 0.5, 5, 0, &sa, nullptr), SK_OK);
  sk_dense_shape(sa, &r, &c);
  EXPECT_EQ(c, 8u);
  sk_dense_free(sa);
  sk_matrix_free(a);
}

TEST(CApi, RegressionConsistent) {
  sk_matrix* a = nullptr;
  ASSERT_EQ(sk_matrix_random(800, 5, 4000, 7, &a), SK_OK);
  // b = A * ones via a dense product computed from triplets written back out.
  std::string path = temp_path("capi_a.mtx");
  ASSERT_EQ(sk_matrix_write_mm(a, path.c_str()), SK_OK);
  sk_dense* ad = nullptr;
  ASSERT_EQ(sk_dense_read_mm(path.c_str(), &ad), SK_OK);
  std::vector<double> b(800, 0.0);
  for (size_t i = 0; i < 800; ++i)
    for (size_t j = 0; j < 5; ++j) b[i] += sk_dense_data(ad)[i * 5 + j];
  sk_dense* bd = nullptr;
  ASSERT_EQ(sk_dense_create(800, 1, b.data(), &bd), SK_OK);
  sk_dense* x = nullptr;
  char* rep = nullptr;
  ASSERT_EQ(sk_solve_regression(a, bd, 0.1, 0.5, 8, 1, &x, &rep), SK_OK);
  for (size_t j = 0; j < 5; ++j) EXPECT_NEAR(sk_dense_data(x)[j], 1.0, 1e-6);
  json j = take_report(rep);
  EXPECT_TRUE(j["oracle"]["within_bound"].get<bool>());
  sk_dense* wrong = nullptr;
  ASSERT_EQ(sk_dense_create(799, 1, b.data(), &wrong), SK_OK);
  sk_dense_free(x);
  EXPECT_EQ(sk_solve_regression(a, wrong, 0.1, 0.5, 8, 0, &x, nullptr), SK_ERR_DIM_MISMATCH);
  sk_dense_free(wrong);
  sk_dense_free(bd);
  sk_dense_free(ad);
  sk_matrix_free(a);
}

TEST(CApi, LowRank) {
  sk_matrix* a = nullptr;
  ASSERT_EQ(sk_matrix_random(200, 150, 6000, 9, &a), SK_OK);
  sk_dense *v = nullptr, *x = nullptr;
  char* rep = nullptr;
  ASSERT_EQ(sk_low_rank(a, 4, 0.5, 0.5, 10, 1, &v, &x, &rep), SK_OK);
  size_t r, c;
  sk_dense_shape(v, &r, &c);
  EXPECT_EQ(r, 200u);
  EXPECT_EQ(c, 4u);
  sk_dense_shape(x, &r, &c);
  EXPECT_EQ(r, 4u);
  EXPECT_EQ(c, 150u);
  json j = take_report(rep);
  EXPECT_TRUE(j["oracle"].contains("within_bound"));
  sk_dense_free(v);
  sk_dense_free(x);
  EXPECT_EQ(sk_low_rank(a, 150, 0.5, 0.5, 10, 0, &v, &x, nullptr), SK_ERR_BAD_RANK);
  sk_matrix_free(a);
}
