#ifndef INTRACTABLE_H
#define INTRACTABLE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IntractableStatus {
  INTRACTABLE_STATUS_OK = 0,
  INTRACTABLE_STATUS_NULL_POINTER = 1,
  INTRACTABLE_STATUS_INVALID_ARGUMENT = 2,
  INTRACTABLE_STATUS_INTRACTABLE = 3,
  INTRACTABLE_STATUS_IO = 4,
  INTRACTABLE_STATUS_PARSE = 5,
  INTRACTABLE_STATUS_CONFIG = 6,
  INTRACTABLE_STATUS_RUNTIME = 7,
  INTRACTABLE_STATUS_PARTIAL = 8,
  INTRACTABLE_STATUS_PANIC = 9,
} IntractableStatus;

typedef enum IntractableInner {
  INTRACTABLE_INNER_GIBBS = 0,
  INTRACTABLE_INNER_SWENDSEN_WANG = 1,
  INTRACTABLE_INNER_EDGE_TOGGLE = 2,
} IntractableInner;

/**
 * Opaque model handle.
 */
typedef struct IntractableModel IntractableModel;

/**
 * Opaque trace handle.
 */
typedef struct IntractableTrace IntractableTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *intractable_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *intractable_last_error(void);

/**
 * Potts model on a `rows` × `cols` free-boundary lattice with `colors` colors.
 */
enum IntractableStatus intractable_potts_new(size_t rows,
                                             size_t cols,
                                             uint8_t colors,
                                             struct IntractableModel **out);

/**
 * Edges + GWESP graph model on `nodes` nodes.
 */
enum IntractableStatus intractable_ergm_new(size_t nodes, struct IntractableModel **out);

/**
 * Ising network model for `respondents` × `items` binary responses.
 */
enum IntractableStatus intractable_isingnet_new(size_t respondents,
                                                size_t items,
                                                struct IntractableModel **out);

void intractable_model_free(struct IntractableModel *model);

/**
 * Parameter dimension p, or 0 for a null handle.
 */
size_t intractable_model_dim(const struct IntractableModel *model);

/**
 * Number of sites in a state, or 0 for a null handle.
 */
size_t intractable_model_num_sites(const struct IntractableModel *model);

/**
 * Sufficient statistics of the state given site by site (Potts cells
 * row-major with colors 1..K, graph dyads (i < j) in lexicographic order
 * as 0/1, responses row-major as 0/1). Writes `out_len` = p values.
 */
enum IntractableStatus intractable_suffstats(const struct IntractableModel *model,
                                             const uint8_t *sites,
                                             size_t n_sites,
                                             double *out,
                                             size_t out_len);

/**
 * Exact log c(θ) by enumeration, refusing state spaces larger than `cap`.
 */
enum IntractableStatus intractable_log_normalizer(const struct IntractableModel *model,
                                                  const double *theta,
                                                  size_t p,
                                                  uint64_t cap,
                                                  double *out);

/**
 * Run `cycles` inner cycles at θ on the state in `sites`, in place.
 */
enum IntractableStatus intractable_simulate(const struct IntractableModel *model,
                                            const double *theta,
                                            size_t p,
                                            enum IntractableInner inner,
                                            size_t cycles,
                                            uint64_t seed,
                                            uint8_t *sites,
                                            size_t n_sites);

/**
 * Run the experiment described by the TOML file at `config_path`.
 * `out_dir` may be null to use the config's output directory. Returns
 * `Partial` when some grid entries failed.
 */
enum IntractableStatus intractable_run_experiment(const char *config_path, const char *out_dir);

/**
 * Load a trace CSV (and its metadata sidecar, when present).
 */
enum IntractableStatus intractable_trace_read(const char *path, struct IntractableTrace **out);

void intractable_trace_free(struct IntractableTrace *trace);

/**
 * Number of stored rows, or 0 for a null handle.
 */
size_t intractable_trace_len(const struct IntractableTrace *trace);

/**
 * Values per row (excluding the iteration index), or 0 for a null handle.
 */
size_t intractable_trace_width(const struct IntractableTrace *trace);

/**
 * Number of leading θ columns, or 0 for a null handle.
 */
size_t intractable_trace_theta_dim(const struct IntractableTrace *trace);

/**
 * Copy row `index` into `out` (`out_len` must equal the trace width) and
 * its iteration number into `iteration` when non-null.
 */
enum IntractableStatus intractable_trace_row(const struct IntractableTrace *trace,
                                             size_t index,
                                             uint64_t *iteration,
                                             double *out,
                                             size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTRACTABLE_H */
