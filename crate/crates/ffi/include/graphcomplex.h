#ifndef GRAPHCOMPLEX_H
#define GRAPHCOMPLEX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `cycle` argument of [`gc_pairing`].
 */
#define GC_CYCLE_ALPHA 0

#define GC_CYCLE_LAMBDA 1

/**
 * `preset` argument of [`gc_linking_preset`].
 */
#define GC_LINK_HOPF 0

#define GC_LINK_UNLINKED 1

#define GC_LINK_S1_VS_I1 2

#define GC_LINK_S2_VS_I2 3

/**
 * Status codes.
 */
typedef enum GcStatus {
  GC_STATUS_OK = 0,
  GC_STATUS_NULL_POINTER = 1,
  GC_STATUS_INVALID_ARGUMENT = 2,
  GC_STATUS_PARSE = 3,
  GC_STATUS_COMPUTATION = 4,
  GC_STATUS_PANIC = 5,
} GcStatus;

/**
 * A homogeneous rational cochain.
 */
typedef struct GcCochain GcCochain;

/**
 * The complex `D^{k,*}` with its coboundary ranks.
 */
typedef struct GcComplex GcComplex;

/**
 * Monte-Carlo value and standard error.
 */
typedef struct GcEstimate {
  double value;
  double std_error;
} GcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t gc_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gc_version(void);

/**
 * Builds `D^{k,*}` and its coboundary matrices.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GcStatus gc_complex_build(int64_t k, struct GcComplex **out);

/**
 * # Safety
 * `c` must come from [`gc_complex_build`] and not be used afterwards.
 */
void gc_complex_free(struct GcComplex *c);

/**
 * Highest degree with a nonempty basis.
 *
 * # Safety
 * `c` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_complex_max_degree(const struct GcComplex *c, int64_t *out);

/**
 * Dimension of `D^{k,l}`.
 *
 * # Safety
 * `c` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_complex_dim(const struct GcComplex *c, int64_t l, uint64_t *out);

/**
 * Betti number of `H^{k,l}`.
 *
 * # Safety
 * `c` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_complex_betti(const struct GcComplex *c, int64_t l, int64_t *out);

/**
 * Euler characteristic of `D^{k,*}`.
 *
 * # Safety
 * `c` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_complex_euler(const struct GcComplex *c, int64_t *out);

/**
 * Parses a cochain from JSON: `[{"coeff": "p/q", "graph": "G[...]"}, ...]`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum GcStatus gc_cochain_parse(const char *json, struct GcCochain **out);

/**
 * # Safety
 * `v` must come from [`gc_cochain_parse`] and not be used afterwards.
 */
void gc_cochain_free(struct GcCochain *v);

/**
 * Number of nonzero terms after canonicalization.
 *
 * # Safety
 * `v` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_cochain_len(const struct GcCochain *v, uint64_t *out);

/**
 * Writes 1 to `out` if the cochain is closed, else 0.
 *
 * # Safety
 * `v` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_cochain_is_cocycle(const struct GcCochain *v, int32_t *out);

/**
 * Dimension of the chord algebra in `order`, with or without the 1T relation.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GcStatus gc_chord_dimension(uint32_t order, int32_t one_term, uint64_t *out);

/**
 * Monte-Carlo linking number of a preset. `n` is ignored by the circle
 * presets and must be at least 4 for the others.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GcStatus gc_linking_preset(int32_t preset,
                                uint32_t n,
                                uint64_t samples,
                                uint64_t seed,
                                struct GcEstimate *out);

/**
 * Pairs a cochain with the alpha or lambda cycle on the default immersion
 * in odd `n >= 5`.
 *
 * # Safety
 * `v` must be a live handle and `out` valid for writes.
 */
enum GcStatus gc_pairing(const struct GcCochain *v,
                         int32_t cycle,
                         uint32_t n,
                         uint64_t samples,
                         uint64_t seed,
                         struct GcEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHCOMPLEX_H */
