#ifndef DELAY_ATTRACTOR_H
#define DELAY_ATTRACTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum DaStatus {
  DA_STATUS_OK = 0,
  DA_STATUS_NULL_POINTER = 1,
  DA_STATUS_INVALID_ARGUMENT = 2,
  DA_STATUS_CONFIG = 3,
  DA_STATUS_EMPTY_COLLECTION = 4,
  DA_STATUS_NUMERICAL = 5,
  DA_STATUS_IO = 6,
  DA_STATUS_FORMAT = 7,
  DA_STATUS_PANIC = 8,
} DaStatus;

/**
 * A box covering together with the report of the run that produced it.
 */
typedef struct DaCovering DaCovering;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *da_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *da_version(void);

/**
 * Runs `steps` subdivision steps for a built-in model (`wright`,
 * `wright-orbit`, `arneodo`, `mackey-glass`). `threads = 0` uses all cores.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DaStatus da_covering_run_preset(const char *name,
                                     uint32_t steps,
                                     size_t points_per_box,
                                     uint64_t seed,
                                     size_t threads,
                                     struct DaCovering **out);

/**
 * Runs the configuration given as INI text (the format read by the
 * command-line tool). No files are written.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DaStatus da_covering_run_config(const char *config_text, struct DaCovering **out);

/**
 * Reads a covering file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DaStatus da_covering_load(const char *path, struct DaCovering **out);

/**
 * Writes the covering file.
 *
 * # Safety
 * `covering` must come from this library and `path` be NUL-terminated.
 */
enum DaStatus da_covering_save(const struct DaCovering *covering, const char *path);

/**
 * Number of boxes; 0 for a null handle.
 *
 * # Safety
 * `covering` must be null or come from this library.
 */
size_t da_covering_len(const struct DaCovering *covering);

/**
 * Dimension `k`; 0 for a null handle.
 *
 * # Safety
 * `covering` must be null or come from this library.
 */
size_t da_covering_dim(const struct DaCovering *covering);

/**
 * Subdivision depth; 0 for a null handle.
 *
 * # Safety
 * `covering` must be null or come from this library.
 */
uint32_t da_covering_depth(const struct DaCovering *covering);

/**
 * Copies the center and radii of box `index` (in file order) into two
 * arrays of length `k`.
 *
 * # Safety
 * `center` and `radii` must each point to `k` writable doubles.
 */
enum DaStatus da_covering_box(const struct DaCovering *covering,
                              size_t index,
                              double *center,
                              double *radii);

/**
 * Finds the box containing `x`. Writes its index, or -1 if no box does.
 *
 * # Safety
 * `x` must point to `k` doubles and `index` to a writable `int64_t`.
 */
enum DaStatus da_covering_locate(const struct DaCovering *covering,
                                 const double *x,
                                 size_t k,
                                 int64_t *index);

/**
 * Fraction of the `n` points (row-major, `k` coordinates each) that lie
 * in the covering.
 *
 * # Safety
 * `points` must point to `n * k` doubles and `fraction` to a writable double.
 */
enum DaStatus da_covering_containment(const struct DaCovering *covering,
                                      const double *points,
                                      size_t n,
                                      size_t k,
                                      double *fraction);

/**
 * Number of boxes after the selection at `depth`, or 0 if the covering
 * has no run report or did not reach `depth`.
 *
 * # Safety
 * `covering` must be null or come from this library.
 */
size_t da_covering_boxes_at_depth(const struct DaCovering *covering, uint32_t depth);

/**
 * Releases a covering. Null is ignored.
 *
 * # Safety
 * `covering` must be null or come from this library and not be used afterwards.
 */
void da_covering_free(struct DaCovering *covering);

/**
 * Simulates a built-in model from its constant initial history and writes
 * `samples` embedded points (row-major, `k` coordinates each) to `out`,
 * which must hold `out_len >= samples * k` doubles.
 *
 * # Safety
 * `name` must be NUL-terminated and `out` point to `out_len` writable doubles.
 */
enum DaStatus da_simulate_preset_orbit(const char *name,
                                       double transient,
                                       size_t samples,
                                       double spacing,
                                       double *out,
                                       size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELAY_ATTRACTOR_H */
