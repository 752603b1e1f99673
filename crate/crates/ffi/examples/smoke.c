/* Minimal C consumer of the wikigraph C ABI: load a snapshot, resolve a
 * category title, run an unlimited-depth closure, export it as CSV.
 *
 * Usage: smoke SNAPSHOT_FILE OUT_CSV
 *
 * Compile (from the ffi crate directory, after `cargo build`):
 *   cc -std=c99 -Wall examples/smoke.c -Iinclude \
 *     ../../target/debug/libwikigraph_ffi.a -lpthread -ldl -lm -o smoke
 */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "wikigraph.h"

static int check(int32_t code, const char *what) {
    if (code != WG_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)code, wg_last_error());
        return 1;
    }
    return 0;
}

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: %s SNAPSHOT_FILE OUT_CSV\n", argv[0]);
        return 2;
    }
    if (wg_abi_version() != WG_ABI_VERSION) {
        fprintf(stderr, "header/library ABI mismatch\n");
        return 1;
    }

    WgGraph *graph = NULL;
    if (check(wg_graph_load(argv[1], &graph), "wg_graph_load")) {
        return 1;
    }

    WgCounts counts;
    if (check(wg_graph_counts(graph, &counts), "wg_graph_counts")) {
        return 1;
    }
    printf("articles=%llu categories=%llu links_to=%llu belongs_to=%llu\n",
           (unsigned long long)counts.articles,
           (unsigned long long)counts.categories,
           (unsigned long long)counts.links_to,
           (unsigned long long)counts.belongs_to);

    uint64_t root = 0;
    if (check(wg_lookup_title(graph, WG_NODE_CATEGORY, (const uint8_t *)"Science",
                              strlen("Science"), &root),
              "wg_lookup_title")) {
        return 1;
    }

    WgSubgraph *sub = NULL;
    if (check(wg_category_closure(graph, root, -1, 0, &sub), "wg_category_closure")) {
        return 1;
    }

    size_t len = 0;
    if (check(wg_subgraph_node_ids(sub, NULL, 0, &len), "node id length query")) {
        return 1;
    }
    uint64_t *ids = (uint64_t *)malloc(len * sizeof(uint64_t));
    if (ids == NULL) {
        return 1;
    }
    if (check(wg_subgraph_node_ids(sub, ids, len, &len), "wg_subgraph_node_ids")) {
        return 1;
    }
    printf("closure nodes:");
    for (size_t i = 0; i < len; i++) {
        printf(" %llu", (unsigned long long)ids[i]);
    }
    printf("\n");
    free(ids);

    WgStats stats;
    if (check(wg_subgraph_stats(sub, &stats), "wg_subgraph_stats")) {
        return 1;
    }
    printf("stats articles=%llu subcategories=%llu hyperlinks=%llu\n",
           (unsigned long long)stats.articles,
           (unsigned long long)stats.subcategories,
           (unsigned long long)stats.hyperlinks);

    if (check(wg_subgraph_export(sub, WG_FORMAT_CSV, argv[2]), "wg_subgraph_export")) {
        return 1;
    }

    wg_subgraph_free(sub);
    wg_graph_free(graph);
    puts("ok");
    return 0;
}
