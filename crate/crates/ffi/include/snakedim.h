#ifndef SNAKEDIM_H
#define SNAKEDIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Regenerate with SNAKEDIM_BLESS=1 cargo test -p snakedim-ffi --test header. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>



typedef enum {
  SNAKEDIM_BUILDER_BRICK = 0,
  SNAKEDIM_BUILDER_PARTITION = 1,
} SnakedimBuilder;

typedef enum {
  /**
   * `a` equally spaced points on the unit interval.
   */
  SNAKEDIM_GENERATOR_SEGMENT = 0,
  /**
   * `a` equally spaced points on a circle of unit circumference.
   */
  SNAKEDIM_GENERATOR_CIRCLE = 1,
  /**
   * `b^a` lattice in the unit cube (`a` = dimension, `b` = side).
   */
  SNAKEDIM_GENERATOR_GRID = 2,
  /**
   * Tripod with `a` points per leg.
   */
  SNAKEDIM_GENERATOR_TRIPOD = 3,
  /**
   * `a`-fold max-product of the tripod with `b` points per leg.
   */
  SNAKEDIM_GENERATOR_TRIPOD_PRODUCT = 4,
  /**
   * Middle-thirds Cantor set at depth `a`.
   */
  SNAKEDIM_GENERATOR_CANTOR = 5,
} SnakedimGenerator;

typedef enum {
  SNAKEDIM_STATUS_OK = 0,
  SNAKEDIM_STATUS_NULL_POINTER = 1,
  SNAKEDIM_STATUS_INVALID_ARGUMENT = 2,
  SNAKEDIM_STATUS_METRIC = 3,
  SNAKEDIM_STATUS_SNAKE = 4,
  SNAKEDIM_STATUS_COVER = 5,
  SNAKEDIM_STATUS_CHAIN = 6,
  SNAKEDIM_STATUS_SEPARATION = 7,
  SNAKEDIM_STATUS_PANIC = 8,
} SnakedimStatus;

/**
 * A cover hierarchy over a space.
 */
typedef struct SnakedimHierarchy SnakedimHierarchy;

/**
 * A total order on the points of a space.
 */
typedef struct SnakedimOrder SnakedimOrder;

/**
 * A validated finite metric space.
 */
typedef struct SnakedimSpace SnakedimSpace;

/**
 * Result of a scale sweep: the largest snake length and the pair attaining it.
 */
typedef struct {
  size_t value;
  size_t x;
  size_t y;
} SnakedimScaleMax;

/**
 * Summary of a chain-order certificate. The `worst_*` fields are only
 * meaningful when `has_worst` is true.
 */
typedef struct {
  bool pass;
  size_t bound;
  bool has_worst;
  size_t worst_x;
  size_t worst_y;
  size_t worst_value;
  size_t worst_level;
  double worst_radius;
  size_t checked_pairs;
  size_t skipped_pairs;
} SnakedimCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *snakedim_last_error(void);

/**
 * Builds a space from a row-major `n × n` distance matrix.
 *
 * # Safety
 * `dist` must point to `n * n` doubles and `out_space` must be writable.
 */
SnakedimStatus snakedim_space_from_matrix(const double *dist, size_t n, SnakedimSpace **out_space);

/**
 * Builds one of the synthetic spaces; see [`SnakedimGenerator`] for the
 * meaning of `a` and `b`.
 *
 * # Safety
 * `out_space` must be writable.
 */
SnakedimStatus snakedim_space_generate(SnakedimGenerator kind,
                                       size_t a,
                                       size_t b,
                                       SnakedimSpace **out_space);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t snakedim_space_len(const SnakedimSpace *space);

/**
 * # Safety
 * `space` must be a live handle and `out_distance` writable.
 */
SnakedimStatus snakedim_space_distance(const SnakedimSpace *space,
                                       size_t i,
                                       size_t j,
                                       double *out_distance);

/**
 * # Safety
 * `space` must be null or a handle not yet freed.
 */
void snakedim_space_free(SnakedimSpace *space);

/**
 * Natural order of a generated space.
 *
 * # Safety
 * `space` must be a live handle and `out_order` writable.
 */
SnakedimStatus snakedim_order_natural(const SnakedimSpace *space, SnakedimOrder **out_order);

/**
 * Order listing `perm[0], perm[1], ...` from smallest to largest.
 *
 * # Safety
 * `perm` must point to `len` values; `space` must be live and `out_order` writable.
 */
SnakedimStatus snakedim_order_from_permutation(const SnakedimSpace *space,
                                               const size_t *perm,
                                               size_t len,
                                               SnakedimOrder **out_order);

/**
 * Lexicographic chain order of a hierarchy, with sets in index order.
 *
 * # Safety
 * `space` and `hierarchy` must be live handles and `out_order` writable.
 */
SnakedimStatus snakedim_order_lex(const SnakedimSpace *space,
                                  const SnakedimHierarchy *hierarchy,
                                  SnakedimOrder **out_order);

/**
 * Binary-code order from the single-linkage separating family.
 *
 * # Safety
 * `space` must be a live handle and `out_order` writable.
 */
SnakedimStatus snakedim_order_binary(const SnakedimSpace *space, SnakedimOrder **out_order);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `order` must be null or a live handle.
 */
size_t snakedim_order_len(const SnakedimOrder *order);

/**
 * Copies the points from smallest to largest into `buf`, which must hold
 * exactly `snakedim_order_len(order)` entries.
 *
 * # Safety
 * `order` must be live and `buf` writable for `len` values.
 */
SnakedimStatus snakedim_order_sequence(const SnakedimOrder *order, size_t *buf, size_t len);

/**
 * # Safety
 * `order` must be null or a handle not yet freed.
 */
void snakedim_order_free(SnakedimOrder *order);

/**
 * Length (points minus one) of the longest alternating snake from `u1` to
 * `u2`, or [`SNAKEDIM_NO_SNAKE`] when `u1` is empty.
 *
 * # Safety
 * `order` must be live; `u1`/`u2` must point to `n1`/`n2` values.
 */
SnakedimStatus snakedim_longest_snake(const SnakedimOrder *order,
                                      const size_t *u1,
                                      size_t n1,
                                      const size_t *u2,
                                      size_t n2,
                                      size_t *out_len);

/**
 * Largest snake over ordered pairs of disjoint `eps`-balls.
 *
 * # Safety
 * `space` and `order` must be live handles and `out_max` writable.
 */
SnakedimStatus snakedim_snake_number_at_scale(const SnakedimSpace *space,
                                              const SnakedimOrder *order,
                                              double eps,
                                              SnakedimScaleMax *out_max);

/**
 * # Safety
 * `space` must be a live handle and `out_hierarchy` writable.
 */
SnakedimStatus snakedim_hierarchy_build(const SnakedimSpace *space,
                                        SnakedimBuilder builder,
                                        size_t depth,
                                        size_t mult_bound,
                                        SnakedimHierarchy **out_hierarchy);

/**
 * Number of levels, or 0 for a null handle.
 *
 * # Safety
 * `hierarchy` must be null or a live handle.
 */
size_t snakedim_hierarchy_depth(const SnakedimHierarchy *hierarchy);

/**
 * # Safety
 * `hierarchy` must be null or a handle not yet freed.
 */
void snakedim_hierarchy_free(SnakedimHierarchy *hierarchy);

/**
 * Checks every pair against the bound `2n + 1`. A failing certificate is
 * still `SNAKEDIM_STATUS_OK`; read `pass`.
 *
 * # Safety
 * All handles must be live and `out_certificate` writable.
 */
SnakedimStatus snakedim_certify(const SnakedimSpace *space,
                                const SnakedimOrder *order,
                                const SnakedimHierarchy *hierarchy,
                                size_t n,
                                SnakedimCertificate *out_certificate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNAKEDIM_H */
