#ifndef WIKIGRAPH_H
#define WIKIGRAPH_H

/* Generated from the wikigraph-ffi crate; do not edit by hand. */

#include <stdint.h>
#include <stddef.h>

/**
 * Current ABI version; bump on any breaking header change.
 */
#define WG_ABI_VERSION 1

#define WG_OK 0

/**
 * A required pointer argument was null.
 */
#define WG_ERR_NULL_ARG -1

/**
 * A string argument was not valid UTF-8 where UTF-8 is required.
 */
#define WG_ERR_UTF8 -2

/**
 * Filesystem error (open, read, write).
 */
#define WG_ERR_IO -3

/**
 * The snapshot file is damaged, truncated, or has a bad version.
 */
#define WG_ERR_CORRUPT -4

/**
 * No node with the requested id or title.
 */
#define WG_ERR_NOT_FOUND -5

/**
 * The node exists but has the wrong kind for this operation.
 */
#define WG_ERR_WRONG_KIND -6

/**
 * The traversal exceeded its node ceiling.
 */
#define WG_ERR_BUDGET -7

/**
 * An enum-like integer argument is out of range.
 */
#define WG_ERR_INVALID_ARG -8

/**
 * The provided buffer is too small; the length output holds the need.
 */
#define WG_ERR_BUFFER_TOO_SMALL -9

/**
 * Export serialization failed.
 */
#define WG_ERR_EXPORT -10

/**
 * An internal panic was caught at the boundary.
 */
#define WG_ERR_PANIC -99

#define WG_NODE_ARTICLE 0

#define WG_NODE_CATEGORY 1

#define WG_EDGE_LINKS_TO 0

#define WG_EDGE_BELONGS_TO 1

#define WG_DIR_OUT 0

#define WG_DIR_IN 1

#define WG_FORMAT_CSV 0

#define WG_FORMAT_JSON 1

#define WG_FORMAT_GRAPHML 2

/**
 * Opaque loaded graph snapshot.
 */
typedef struct WgGraph WgGraph;

/**
 * Opaque query result.
 */
typedef struct WgSubgraph WgSubgraph;

/**
 * Node and edge totals of a loaded snapshot.
 */
typedef struct WgCounts {
  uint64_t articles;
  uint64_t categories;
  uint64_t links_to;
  uint64_t belongs_to;
} WgCounts;

/**
 * Subgraph statistics as reported by queries.
 */
typedef struct WgStats {
  uint64_t articles;
  uint64_t subcategories;
  uint64_t hyperlinks;
} WgStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI version of this library.
 */
uint32_t wg_abi_version(void);

/**
 * Message of the most recent failing call on this thread. Never null;
 * empty before the first failure. The pointer stays valid until the next
 * failing call on the same thread.
 */
const char *wg_last_error(void);

/**
 * Loads a graph snapshot file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must point to writable
 * memory for one pointer. On success `*out` owns the graph until
 * `wg_graph_free`.
 */
int32_t wg_graph_load(const char *path, struct WgGraph **out);

/**
 * Releases a graph handle. Null is a no-op.
 *
 * # Safety
 * `graph` must be a pointer returned by `wg_graph_load` that has not been
 * freed yet.
 */
void wg_graph_free(struct WgGraph *graph);

/**
 * Writes the snapshot's node and edge totals to `out`.
 *
 * # Safety
 * `graph` must be a live handle; `out` must point to a `WgCounts`.
 */
int32_t wg_graph_counts(const struct WgGraph *graph, struct WgCounts *out);

/**
 * Resolves a byte-exact title of the given kind (`WG_NODE_*`) to a page id.
 *
 * # Safety
 * `graph` must be a live handle; `title` must point to `title_len` readable
 * bytes; `out_id` must be writable.
 */
int32_t wg_lookup_title(const struct WgGraph *graph,
                        int32_t kind,
                        const uint8_t *title,
                        size_t title_len,
                        uint64_t *out_id);

/**
 * Writes the neighbor page ids of `page_id` over one edge kind and
 * direction. Two-call pattern: a null `buf` only reports the length.
 *
 * # Safety
 * `graph` must be a live handle; `buf`, when non-null, must hold `cap`
 * writable u64 slots; `out_len` must be writable.
 */
int32_t wg_neighbors(const struct WgGraph *graph,
                     uint64_t page_id,
                     int32_t edge_kind,
                     int32_t direction,
                     uint64_t *buf,
                     size_t cap,
                     size_t *out_len);

/**
 * Runs a category closure from `root`. `depth < 0` means unlimited;
 * `node_ceiling == 0` keeps the default (1,000,000).
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable. On success `*out`
 * owns the subgraph until `wg_subgraph_free`.
 */
int32_t wg_category_closure(const struct WgGraph *graph,
                            uint64_t root,
                            int64_t depth,
                            uint64_t node_ceiling,
                            struct WgSubgraph **out);

/**
 * Runs a links_to neighborhood from `root`. `max_out_degree < 0` disables
 * the expansion cap; `node_ceiling == 0` keeps the default.
 *
 * # Safety
 * Same contract as `wg_category_closure`.
 */
int32_t wg_neighborhood(const struct WgGraph *graph,
                        uint64_t root,
                        uint32_t depth,
                        int64_t max_out_degree,
                        uint64_t node_ceiling,
                        struct WgSubgraph **out);

/**
 * Releases a subgraph handle. Null is a no-op.
 *
 * # Safety
 * `sub` must be a pointer returned by a query that has not been freed yet.
 */
void wg_subgraph_free(struct WgSubgraph *sub);

/**
 * Writes the subgraph statistics to `out`.
 *
 * # Safety
 * `sub` must be a live handle; `out` must point to a `WgStats`.
 */
int32_t wg_subgraph_stats(const struct WgSubgraph *sub, struct WgStats *out);

/**
 * Number of nodes in the subgraph.
 *
 * # Safety
 * `sub` must be a live handle; `out` must be writable.
 */
int32_t wg_subgraph_node_count(const struct WgSubgraph *sub, uint64_t *out);

/**
 * Number of edges in the subgraph (both kinds).
 *
 * # Safety
 * `sub` must be a live handle; `out` must be writable.
 */
int32_t wg_subgraph_edge_count(const struct WgSubgraph *sub, uint64_t *out);

/**
 * Writes the subgraph's node ids in ascending order. Two-call pattern.
 *
 * # Safety
 * `sub` must be a live handle; `buf`, when non-null, must hold `cap`
 * writable u64 slots; `out_len` must be writable.
 */
int32_t wg_subgraph_node_ids(const struct WgSubgraph *sub,
                             uint64_t *buf,
                             size_t cap,
                             size_t *out_len);

/**
 * Exports the subgraph to a file in the given `WG_FORMAT_*`.
 *
 * # Safety
 * `sub` must be a live handle; `path` must be NUL-terminated.
 */
int32_t wg_subgraph_export(const struct WgSubgraph *sub, int32_t format, const char *path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WIKIGRAPH_H */
