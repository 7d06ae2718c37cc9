#ifndef SKETCHKIT_H
#define SKETCHKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. Every function returning int uses these; they double as the
   CLI exit codes. */
enum {
  SK_OK = 0,
  SK_ERR_INTERNAL = 1,
  SK_ERR_USAGE = 2,
  SK_ERR_PARSE = 3,
  SK_ERR_IO = 4,
  SK_ERR_DIM_MISMATCH = 5,
  SK_ERR_BAD_PARAMS = 6,
  SK_ERR_RANK_DEFICIENT = 7,
  SK_ERR_BAD_RANK = 8,
  SK_ERR_BLOWUP_EXCEEDED = 9,
  SK_ERR_DEGENERATE_NORM = 10,
  SK_ERR_NO_CONVERGENCE = 11,
  SK_ERR_RANK_LOST = 12,
  SK_ERR_DEGENERATE_RESIDUAL = 13,
  SK_ERR_BARRIER_STUCK = 14,
  SK_ERR_RANK_COLLAPSE = 15
};

typedef struct sk_matrix sk_matrix; /* sparse CSR */
typedef struct sk_dense sk_dense;   /* dense, row-major */

const char* sk_version(void);
const char* sk_error_name(int code);
/* Message of the last failing call on this thread. */
const char* sk_last_error(void);
void sk_string_free(char* s);

int sk_set_constant(const char* name, double value);
int sk_get_constant(const char* name, double* value);
void sk_reset_constants(void);
int sk_constants_json(char** out);

int sk_matrix_read_mm(const char* path, sk_matrix** out);
int sk_matrix_write_mm(const sk_matrix* a, const char* path);
int sk_matrix_from_triplets(size_t rows, size_t cols, size_t nnz, const size_t* row_idx, const size_t* col_idx,
                            const double* values, sk_matrix** out);
/* Random sparse rows x cols matrix with about nnz nonzeros. */
int sk_matrix_random(size_t rows, size_t cols, size_t nnz, uint64_t seed, sk_matrix** out);
int sk_matrix_shape(const sk_matrix* a, size_t* rows, size_t* cols, size_t* nnz);
void sk_matrix_free(sk_matrix* a);

/* Reads array or coordinate Matrix Market files. */
int sk_dense_read_mm(const char* path, sk_dense** out);
int sk_dense_write_mm(const sk_dense* a, const char* path);
int sk_dense_create(size_t rows, size_t cols, const double* data, sk_dense** out);
int sk_dense_shape(const sk_dense* a, size_t* rows, size_t* cols);
const double* sk_dense_data(const sk_dense* a);
void sk_dense_free(sk_dense* a);

/* Algorithms. Each writes a JSON report to *report (free with
   sk_string_free). Every output pointer may be NULL to skip that output.
   oracle != 0 adds exact dense comparisons to the report. k = 0 selects
   the column count in sk_fast_embed. */
int sk_fast_embed(const sk_matrix* a, size_t k, double gamma, uint64_t seed, int oracle, sk_dense** sa,
                  char** report);
int sk_leverage_embedding(const sk_matrix* a, double eps, double gamma, uint64_t seed, int oracle,
                          sk_dense** s_lev_a, char** report);
int sk_solve_regression(const sk_matrix* a, const sk_dense* b, double eps, double gamma, uint64_t seed, int oracle,
                        sk_dense** x, char** report);
int sk_compute_rank(const sk_matrix* a, uint64_t seed, int oracle, size_t* rank, char** report);
/* rows receives a malloc'd array of *count indices (free with sk_free). */
int sk_independent_rows(const sk_matrix* a, uint64_t seed, size_t retries, int oracle, size_t** rows,
                        size_t* count, char** report);
int sk_low_rank(const sk_matrix* a, size_t k, double eps, double gamma, uint64_t seed, int oracle, sk_dense** v,
                sk_dense** x, char** report);
void sk_free(void* p);

#ifdef __cplusplus
}
#endif

#endif
