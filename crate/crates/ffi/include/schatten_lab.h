#ifndef SCHATTEN_LAB_H
#define SCHATTEN_LAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlBesovForm {
  SL_BESOV_FORM_NU = 0,
  SL_BESOV_FORM_LAMBDA_MU_INVERSE = 1,
  SL_BESOV_FORM_LAMBDA_INVERSE_MU = 2,
} SlBesovForm;

typedef enum SlGrid {
  SL_GRID_STANDARD = 0,
  /**
   * One-third shifted grid.
   */
  SL_GRID_SHIFTED = 1,
} SlGrid;

typedef enum SlOperatorKind {
  SL_OPERATOR_KIND_PARAPRODUCT = 0,
  SL_OPERATOR_KIND_PARAPRODUCT_ADJOINT = 1,
  /**
   * `[M_b, H]`; always on the standard grid.
   */
  SL_OPERATOR_KIND_COMMUTATOR = 2,
  /**
   * `[M_b, Ш]`
   */
  SL_OPERATOR_KIND_SHIFT_COMMUTATOR = 3,
} SlOperatorKind;

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_INVALID_ARGUMENT = 3,
  SL_STATUS_INVALID_CONFIGURATION = 4,
  SL_STATUS_DIVERGED_INTEGRAL = 5,
  SL_STATUS_DEGENERATE_WEIGHT = 6,
  SL_STATUS_INVALID_MATRIX = 7,
  SL_STATUS_NO_COVER = 8,
  SL_STATUS_INFEASIBLE = 9,
  SL_STATUS_BASIS_MISMATCH = 10,
  SL_STATUS_IO = 11,
  SL_STATUS_BUFFER_TOO_SMALL = 12,
  SL_STATUS_PANIC = 13,
} SlStatus;

typedef struct SlOperator SlOperator;

typedef struct SlSymbol SlSymbol;

typedef struct SlWeightPair SlWeightPair;

/**
 * Window `[lo, hi)` with scales `j_min..=j_max`.
 */
typedef struct SlWindow {
  double lo;
  double hi;
  int32_t j_min;
  int32_t j_max;
} SlWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *sl_last_error(void);

/**
 * Static, NUL-terminated crate version.
 */
const char *sl_version(void);

/**
 * Parses `sine:F`, `parabola`, `plateau`, `linear`, `const:C` or
 * `haar:J:K:COEF[+J:K:COEF...]`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_symbol_parse(const char *spec, struct SlSymbol **out);

/**
 * # Safety
 * `s` must come from [`sl_symbol_parse`] or be null.
 */
void sl_symbol_free(struct SlSymbol *s);

/**
 * Parses `MU/LAMBDA`, each weight `one`, `const:C`, `pow:E[@CENTER]` or `path:R:J:A`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_weight_pair_parse(const char *spec, struct SlWeightPair **out);

/**
 * # Safety
 * `w` must come from [`sl_weight_pair_parse`] or be null.
 */
void sl_weight_pair_free(struct SlWeightPair *w);

/**
 * Builds `λ^{1/2} T μ^{-1/2}` on the finest cells of the window.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum SlStatus sl_operator_new(enum SlOperatorKind kind,
                              const struct SlSymbol *symbol,
                              const struct SlWeightPair *pair,
                              struct SlWindow win,
                              enum SlGrid grid_kind,
                              struct SlOperator **out);

/**
 * # Safety
 * `op` must come from [`sl_operator_new`] or be null.
 */
void sl_operator_free(struct SlOperator *op);

/**
 * Matrix dimension `N` (the operator is `N × N`).
 *
 * # Safety
 * `op` must be live and `n` a valid pointer.
 */
enum SlStatus sl_operator_dim(const struct SlOperator *op, size_t *n);

/**
 * Copies the matrix in row-major order into `buf`, which must hold `N²` values.
 *
 * # Safety
 * `op` must be live and `buf` valid for `len` writes.
 */
enum SlStatus sl_operator_copy_matrix(const struct SlOperator *op, double *buf, size_t len);

/**
 * Writes the nonincreasing singular values into `buf` and their count into
 * `count`. With `buf` null only `count` is written.
 *
 * # Safety
 * `op` must be live, `count` valid, and `buf` null or valid for `len` writes.
 */
enum SlStatus sl_operator_singular_values(struct SlOperator *op,
                                          double *buf,
                                          size_t len,
                                          size_t *count);

/**
 * `‖op‖_{S^p}` for `p > 0`.
 *
 * # Safety
 * `op` must be live and `out` a valid pointer.
 */
enum SlStatus sl_operator_schatten_norm(struct SlOperator *op, double p, double *out);

/**
 * Dyadic Besov norm `‖b‖_{B^p}` in the chosen form over one grid.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum SlStatus sl_besov_dyadic(const struct SlSymbol *symbol,
                              const struct SlWeightPair *pair,
                              double p,
                              struct SlWindow win,
                              enum SlGrid grid_kind,
                              enum SlBesovForm form,
                              double *out);

/**
 * Continuous `‖b‖_{B²_ν}` by quadrature; `error` may be null.
 *
 * # Safety
 * Handles must be live, `out` valid, `error` null or valid.
 */
enum SlStatus sl_besov_continuous_p2(const struct SlSymbol *symbol,
                                     const struct SlWeightPair *pair,
                                     struct SlWindow win,
                                     double *out,
                                     double *error);

/**
 * Runs experiment `E1`..`E8` from its defaults, writes its reports into
 * `out_dir` and stores whether every acceptance check held in `passed`.
 *
 * # Safety
 * Strings must be NUL-terminated and `passed` a valid pointer.
 */
enum SlStatus sl_certify(const char *experiment, const char *out_dir, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHATTEN_LAB_H */
