#ifndef BERGMAN_TOEPLITZ_H
#define BERGMAN_TOEPLITZ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_INVALID_UTF8 = 2,
  BT_STATUS_VALIDATION = 3,
  BT_STATUS_UNSUPPORTED = 4,
  BT_STATUS_PARSE = 5,
  BT_STATUS_EVAL = 6,
  BT_STATUS_DOMAIN = 7,
  BT_STATUS_NUMERICAL = 8,
  BT_STATUS_IO = 9,
  BT_STATUS_CONFIG = 10,
  BT_STATUS_OUT_OF_RANGE = 11,
  BT_STATUS_PANIC = 12,
} BtStatus;

typedef enum BtFormat {
  BT_FORMAT_CSV = 0,
  BT_FORMAT_JSON = 1,
} BtFormat;

typedef enum BtCommand {
  BT_COMMAND_GAMMA = 0,
  BT_COMMAND_OPERATOR = 1,
  BT_COMMAND_COMMUTATOR = 2,
  BT_COMMAND_FUSION = 3,
  BT_COMMAND_ORACLE_COMPARE = 4,
  BT_COMMAND_GEOMETRY = 5,
} BtCommand;

// Parsed job configuration.
typedef struct BtJob BtJob;

// Assembled Toeplitz matrix in coordinate form.
typedef struct BtMatrix BtMatrix;

// One nonzero entry.
typedef struct BtEntry {
  size_t row;
  size_t col;
  double re;
  double im;
} BtEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread; do not free.
const char *bt_last_error(void);

// Library version as a static string; do not free.
const char *bt_version(void);

// Parses a JSON job configuration into `*out`.
//
// # Safety
// `json` must be a valid nul-terminated string and `out` a valid pointer.
enum BtStatus bt_job_from_json(const char *json, struct BtJob **out);

// # Safety
// `job` must come from [`bt_job_from_json`] and not be used afterwards. NULL is ignored.
void bt_job_free(struct BtJob *job);

// Overrides the seed of every random component, as the CLI `--seed` flag.
//
// # Safety
// `job` must be a live handle.
enum BtStatus bt_job_set_seed(struct BtJob *job, uint64_t seed);

// Sets the output format used by [`bt_job_run`].
//
// # Safety
// `job` must be a live handle.
enum BtStatus bt_job_set_format(struct BtJob *job, enum BtFormat format);

// Runs a command and stores its output text (the CLI file contents) in `*out`.
//
// # Safety
// `job` must be a live handle and `out` a valid pointer.
enum BtStatus bt_job_run(const struct BtJob *job, enum BtCommand command, char **out);

// # Safety
// `s` must come from this library and not be used afterwards. NULL is ignored.
void bt_string_free(char *s);

// `γ(α)` of symbol `symbol` (0-based). `*hard_zero` is set when `α + p`
// leaves the basis; `re` and `im` are then 0.
//
// # Safety
// `job` must be a live handle, `alpha` must point to `len` values, and the
// output pointers must be valid.
enum BtStatus bt_gamma(const struct BtJob *job,
                       size_t symbol,
                       const uint32_t *alpha,
                       size_t len,
                       double *re,
                       double *im,
                       bool *hard_zero);

// Assembles the normalized matrix of symbol `symbol` (0-based) into `*out`.
//
// # Safety
// `job` must be a live handle and `out` a valid pointer.
enum BtStatus bt_operator(const struct BtJob *job, size_t symbol, struct BtMatrix **out);

// # Safety
// `m` must come from [`bt_operator`] and not be used afterwards. NULL is ignored.
void bt_matrix_free(struct BtMatrix *m);

// Dimension of the basis. Returns 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t bt_matrix_dim(const struct BtMatrix *m);

// Number of stored nonzeros. Returns 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t bt_matrix_nnz(const struct BtMatrix *m);

// Copies the nonzeros in column order into `entries` (capacity `cap`).
//
// # Safety
// `m` must be a live handle and `entries` must point to `cap` writable entries.
enum BtStatus bt_matrix_entries(const struct BtMatrix *m, struct BtEntry *entries, size_t cap);

// Fusion verdict of symbol 0 against the remaining symbols: 0 EQUAL,
// 1 UNEQUAL, 2 INCONCLUSIVE, 3 DEGENERATE.
//
// # Safety
// `job` must be a live handle and the output pointers valid.
enum BtStatus bt_fusion(const struct BtJob *job, double *defect, double *scale, int32_t *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_TOEPLITZ_H */
