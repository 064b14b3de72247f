#ifndef PKGNET_H
#define PKGNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkgnetStatus {
  PKGNET_STATUS_OK = 0,
  PKGNET_STATUS_NULL_ARGUMENT = 1,
  PKGNET_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed input text.
   */
  PKGNET_STATUS_PARSE = 3,
  PKGNET_STATUS_UNKNOWN_NODE = 4,
  PKGNET_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The analysis could not be carried out on this graph.
   */
  PKGNET_STATUS_COMPUTATION = 6,
  PKGNET_STATUS_PANIC = 7,
} PkgnetStatus;

typedef enum PkgnetEdgeKind {
  PKGNET_EDGE_KIND_DEPENDENCY = 0,
  PKGNET_EDGE_KIND_CONFLICT = 1,
} PkgnetEdgeKind;

typedef enum PkgnetDirection {
  PKGNET_DIRECTION_IN = 0,
  PKGNET_DIRECTION_OUT = 1,
} PkgnetDirection;

typedef enum PkgnetConflictMode {
  PKGNET_CONFLICT_MODE_AS_DECLARED = 0,
  PKGNET_CONFLICT_MODE_SYMMETRIC = 1,
} PkgnetConflictMode;

/**
 * Opaque graph handle.
 */
typedef struct PkgnetGraph PkgnetGraph;

/**
 * Observed statistic against a rewired null ensemble. `z` is meaningful
 * only when `z_defined` is true (the null samples have non-zero spread).
 */
typedef struct PkgnetEnsembleStats {
  double observed;
  double null_mean;
  double null_std;
  double z;
  bool z_defined;
  /**
   * Share of null samples at least as large as `observed`.
   */
  double p;
  size_t n_samples;
} PkgnetEnsembleStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pkgnet_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pkgnet_version(void);

/**
 * Parse a `DEP`/`CON`/`NODE` edge list.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum PkgnetStatus pkgnet_graph_from_edge_list(const char *text, struct PkgnetGraph **out);

/**
 * Parse a Debian `Packages` index of `len` bytes and resolve it into a
 * graph. `policy_json` is NULL for the default policy, or a JSON object
 * such as `{"alternatives": "all_alternatives", "virtuals": "drop"}`.
 *
 * # Safety
 * `data` must point to `len` readable bytes, `policy_json` must be NULL or
 * NUL-terminated and `out` valid for writes.
 */
enum PkgnetStatus pkgnet_graph_from_packages(const uint8_t *data,
                                             size_t len,
                                             const char *policy_json,
                                             struct PkgnetGraph **out);

/**
 * Release a graph. NULL is ignored.
 *
 * # Safety
 * `graph` must be NULL or a handle not yet freed.
 */
void pkgnet_graph_free(struct PkgnetGraph *graph);

/**
 * Node, dependency-edge and conflict-edge counts. Any out-pointer may be
 * NULL to skip it.
 *
 * # Safety
 * `graph` must be a live handle; non-NULL out-pointers valid for writes.
 */
enum PkgnetStatus pkgnet_graph_counts(const struct PkgnetGraph *graph,
                                      size_t *nodes,
                                      size_t *dep_edges,
                                      size_t *con_edges);

/**
 * Degree of package `name` for one relation and direction.
 *
 * # Safety
 * `graph` must be a live handle, `name` NUL-terminated, `out` valid for writes.
 */
enum PkgnetStatus pkgnet_graph_degree(const struct PkgnetGraph *graph,
                                      const char *name,
                                      enum PkgnetEdgeKind kind,
                                      enum PkgnetDirection direction,
                                      size_t *out);

/**
 * Best-of-`restarts` Louvain modularity of the dependency projection over
 * interacting packages.
 *
 * # Safety
 * `graph` must be a live handle and `q` valid for writes.
 */
enum PkgnetStatus pkgnet_louvain_q(const struct PkgnetGraph *graph,
                                   size_t restarts,
                                   uint64_t seed,
                                   double *q);

/**
 * Mean and sample standard deviation of the installed fraction over
 * `replicates` runs of the installation process.
 *
 * # Safety
 * `graph` must be a live handle; `mean` and `std` valid for writes.
 */
enum PkgnetStatus pkgnet_simulate(const struct PkgnetGraph *graph,
                                  size_t replicates,
                                  uint64_t seed,
                                  enum PkgnetConflictMode conflicts,
                                  double *mean,
                                  double *std);

/**
 * Louvain modularity against `randomizations` degree-preserving rewirings.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum PkgnetStatus pkgnet_modularity_significance(const struct PkgnetGraph *graph,
                                                 size_t randomizations,
                                                 size_t restarts,
                                                 size_t swaps_per_edge,
                                                 uint64_t seed,
                                                 struct PkgnetEnsembleStats *out);

/**
 * Mean installed fraction against `networks` rewired dependency networks
 * (conflicts kept), `replicates` runs each.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum PkgnetStatus pkgnet_modularity_effect(const struct PkgnetGraph *graph,
                                           size_t networks,
                                           size_t replicates,
                                           size_t swaps_per_edge,
                                           uint64_t seed,
                                           enum PkgnetConflictMode conflicts,
                                           struct PkgnetEnsembleStats *out);

/**
 * Graph summary as a JSON object; free the string with `pkgnet_string_free`.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for writes.
 */
enum PkgnetStatus pkgnet_graph_summary_json(const struct PkgnetGraph *graph, char **out);

/**
 * Free a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string from `pkgnet_graph_summary_json` not yet freed.
 */
void pkgnet_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PKGNET_H */
