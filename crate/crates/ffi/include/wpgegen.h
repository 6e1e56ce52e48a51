#ifndef WPGEGEN_H
#define WPGEGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum WpgStatus {
  WPG_STATUS_OK = 0,
  WPG_STATUS_NULL_POINTER = 1,
  WPG_STATUS_INVALID_ARGUMENT = 2,
  WPG_STATUS_UNSUPPORTED_FILTER = 3,
  WPG_STATUS_LENGTH_MISMATCH = 4,
  WPG_STATUS_INVALID_TREE = 5,
  WPG_STATUS_INVALID_MODEL = 6,
  WPG_STATUS_INVALID_FREQUENCY = 7,
  WPG_STATUS_DUPLICATE_FREQUENCY = 8,
  WPG_STATUS_SINGULAR_FREQUENCY = 9,
  WPG_STATUS_BASIS_NOT_FOUND = 10,
  WPG_STATUS_QUADRATURE_FAILURE = 11,
  WPG_STATUS_NON_POSITIVE_DEFINITE = 12,
  WPG_STATUS_DIMENSION_MISMATCH = 13,
  WPG_STATUS_ZERO_VARIANCE = 14,
  WPG_STATUS_INSUFFICIENT_PAIRS = 15,
  WPG_STATUS_BUFFER_TOO_SMALL = 16,
  WPG_STATUS_PANIC = 17,
} WpgStatus;

// Filter pair handle.
typedef struct WpgFilter WpgFilter;

// Gegenbauer model handle.
typedef struct WpgModel WpgModel;

// Packet tree handle.
typedef struct WpgTree WpgTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t wpg_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *wpg_version(void);

// Model with `k` factors `(d[i], nu[i])` (nu in cycles/sample) and
// innovation variance `sigma2`.
//
// # Safety
// `d` and `nu` must point to `k` doubles; `out` must be writable.
enum WpgStatus wpg_model_new(const double *d,
                             const double *nu,
                             size_t k,
                             double sigma2,
                             struct WpgModel **out);

// # Safety
// `model` must come from `wpg_model_new` and not be used afterwards.
void wpg_model_free(struct WpgModel *model);

// Power spectral density at `lambda` (cycles/sample).
//
// # Safety
// Pointers must be valid.
enum WpgStatus wpg_model_psd(const struct WpgModel *model, double lambda, double *out);

// Autocovariances for lags `0..=max_lag` into `out` (length `max_lag + 1`).
// `tol <= 0` selects the default relative tolerance.
//
// # Safety
// `out` must point to `max_lag + 1` doubles.
enum WpgStatus wpg_model_acv(const struct WpgModel *model, size_t max_lag, double tol, double *out);

// Filter from a label such as `db10`, `sym8`, `coif5`, `bl6` or `daubechies:4`.
//
// # Safety
// `label` must be a NUL-terminated string; `out` must be writable.
enum WpgStatus wpg_filter_new(const char *label, struct WpgFilter **out);

// # Safety
// `filter` must come from `wpg_filter_new` and not be used afterwards.
void wpg_filter_free(struct WpgFilter *filter);

// Number of low-pass taps, 0 for a null handle.
//
// # Safety
// `filter` must be null or valid.
size_t wpg_filter_length(const struct WpgFilter *filter);

// Singularity-driven basis for the `k` frequencies `nu` at depth `depth`.
//
// # Safety
// `nu` must point to `k` doubles; `out` must be writable.
enum WpgStatus wpg_basis_ours(const double *nu, size_t k, uint32_t depth, struct WpgTree **out);

// Filter-gain thresholding basis (`threshold <= 0` selects 0.01).
//
// # Safety
// `nu` must point to `k` doubles; handles must be valid; `out` writable.
enum WpgStatus wpg_basis_whitcher(const double *nu,
                                  size_t k,
                                  const struct WpgFilter *filter,
                                  uint32_t depth,
                                  double threshold,
                                  struct WpgTree **out);

// Tree from its JSON form `{"J":..,"leaves":[[j,p],..]}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum WpgStatus wpg_tree_from_json(const char *json, struct WpgTree **out);

// Writes the JSON form into `buf` (NUL-terminated). `needed` receives the
// required capacity including the terminator; `BufferTooSmall` when `cap`
// is insufficient.
//
// # Safety
// `buf` must point to `cap` writable bytes (or be null with `cap == 0`).
enum WpgStatus wpg_tree_to_json(const struct WpgTree *tree, char *buf, size_t cap, size_t *needed);

// # Safety
// `tree` must come from this library and not be used afterwards.
void wpg_tree_free(struct WpgTree *tree);

// Number of leaves, 0 for a null handle.
//
// # Safety
// `tree` must be null or valid.
size_t wpg_tree_leaf_count(const struct WpgTree *tree);

// Series length `2^J`, 0 for a null handle.
//
// # Safety
// `tree` must be null or valid.
size_t wpg_tree_length(const struct WpgTree *tree);

// Leaf `index` (in band order) as `(j, p)`.
//
// # Safety
// Pointers must be valid.
enum WpgStatus wpg_tree_leaf(const struct WpgTree *tree, size_t index, uint32_t *j, uint64_t *p);

// Forward transform of `x` (length `n = 2^J`) into `out`, leaves in band
// order, concatenated.
//
// # Safety
// `x` and `out` must point to `n` doubles.
enum WpgStatus wpg_analyze(const struct WpgTree *tree,
                           const struct WpgFilter *filter,
                           const double *x,
                           size_t n,
                           double *out);

// Inverse transform of concatenated coefficients `c` (length `n`).
//
// # Safety
// `c` and `out` must point to `n` doubles.
enum WpgStatus wpg_synthesize(const struct WpgTree *tree,
                              const struct WpgFilter *filter,
                              const double *c,
                              size_t n,
                              double *out);

// Packet-domain simulation; `out` receives `replicates` series of length
// `2^J` back to back.
//
// # Safety
// `out` must point to `replicates * 2^J` doubles.
enum WpgStatus wpg_simulate_wp(const struct WpgModel *model,
                               const struct WpgTree *tree,
                               const struct WpgFilter *filter,
                               uint64_t seed,
                               size_t replicates,
                               double *out);

// Exact Gaussian simulation (Durbin-Levinson); `out` holds
// `replicates * n` doubles.
//
// # Safety
// `out` must point to `replicates * n` doubles.
enum WpgStatus wpg_simulate_hosking(const struct WpgModel *model,
                                    size_t n,
                                    uint64_t seed,
                                    size_t replicates,
                                    double *out);

// Penalised diagonalisation score of `tree`: writes `lambda`, the squared
// HS error and `S = hs_error + lambda * leaves`.
//
// # Safety
// Handles and output pointers must be valid.
enum WpgStatus wpg_score_s(const struct WpgModel *model,
                           const struct WpgTree *tree,
                           const struct WpgFilter *filter,
                           double *lambda,
                           double *hs_error,
                           double *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WPGEGEN_H */
