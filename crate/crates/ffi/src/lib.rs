//! C ABI over the graph store: load snapshots, inspect counts, walk
//! neighbors, run category-closure and neighborhood queries, export the
//! result.
//!
//! Conventions:
//! - every fallible function returns `WG_OK` (0) or a negative error code;
//!   `wg_last_error` returns the message for the most recent failure on the
//!   calling thread, valid until that thread's next failing call;
//! - `WgGraph` and `WgSubgraph` are opaque handles allocated here and
//!   released only through the matching `wg_*_free`;
//! - array outputs use a two-call pattern: pass a null buffer to learn the
//!   required length, then call again with a buffer at least that large;
//! - panics never unwind across the boundary; they surface as
//!   `WG_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use wikigraph::graph::{load_snapshot, GraphSnapshot, SnapshotFileError};
use wikigraph::query::{export, DepthSpec, ExportFormat, QueryEngine, QueryError, Subgraph};
use wikigraph::types::{Direction, EdgeKind, NodeKind, PageId, Title};

/// Current ABI version; bump on any breaking header change.
pub const WG_ABI_VERSION: u32 = 1;

pub const WG_OK: i32 = 0;
/// A required pointer argument was null.
pub const WG_ERR_NULL_ARG: i32 = -1;
/// A string argument was not valid UTF-8 where UTF-8 is required.
pub const WG_ERR_UTF8: i32 = -2;
/// Filesystem error (open, read, write).
pub const WG_ERR_IO: i32 = -3;
/// The snapshot file is damaged, truncated, or has a bad version.
pub const WG_ERR_CORRUPT: i32 = -4;
/// No node with the requested id or title.
pub const WG_ERR_NOT_FOUND: i32 = -5;
/// The node exists but has the wrong kind for this operation.
pub const WG_ERR_WRONG_KIND: i32 = -6;
/// The traversal exceeded its node ceiling.
pub const WG_ERR_BUDGET: i32 = -7;
/// An enum-like integer argument is out of range.
pub const WG_ERR_INVALID_ARG: i32 = -8;
/// The provided buffer is too small; the length output holds the need.
pub const WG_ERR_BUFFER_TOO_SMALL: i32 = -9;
/// Export serialization failed.
pub const WG_ERR_EXPORT: i32 = -10;
/// An internal panic was caught at the boundary.
pub const WG_ERR_PANIC: i32 = -99;

pub const WG_NODE_ARTICLE: i32 = 0;
pub const WG_NODE_CATEGORY: i32 = 1;
pub const WG_EDGE_LINKS_TO: i32 = 0;
pub const WG_EDGE_BELONGS_TO: i32 = 1;
pub const WG_DIR_OUT: i32 = 0;
pub const WG_DIR_IN: i32 = 1;
pub const WG_FORMAT_CSV: i32 = 0;
pub const WG_FORMAT_JSON: i32 = 1;
pub const WG_FORMAT_GRAPHML: i32 = 2;

/// Opaque loaded graph snapshot.
pub struct WgGraph(GraphSnapshot);

/// Opaque query result.
pub struct WgSubgraph(Subgraph);

/// Node and edge totals of a loaded snapshot.
#[repr(C)]
pub struct WgCounts {
    pub articles: u64,
    pub categories: u64,
    pub links_to: u64,
    pub belongs_to: u64,
}

/// Subgraph statistics as reported by queries.
#[repr(C)]
pub struct WgStats {
    pub articles: u64,
    pub subcategories: u64,
    pub hyperlinks: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let sanitized = message.replace('\0', "?");
    LAST_ERROR.with(|cell| {
        *cell.borrow_mut() = CString::new(sanitized).expect("no interior NUL");
    });
}

fn fail(code: i32, message: impl ToString) -> i32 {
    set_last_error(message.to_string());
    code
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(WG_ERR_PANIC, "internal panic caught at the FFI boundary"),
    }
}

fn snapshot_error_code(err: &SnapshotFileError) -> i32 {
    match err {
        SnapshotFileError::Io(_) => WG_ERR_IO,
        _ => WG_ERR_CORRUPT,
    }
}

fn query_error_code(err: &QueryError) -> i32 {
    match err {
        QueryError::NotFound(_) => WG_ERR_NOT_FOUND,
        QueryError::WrongKind { .. } => WG_ERR_WRONG_KIND,
        QueryError::BudgetExceeded { .. } => WG_ERR_BUDGET,
        QueryError::Ts(_) => WG_ERR_IO,
    }
}

fn node_kind_from(value: i32) -> Option<NodeKind> {
    match value {
        WG_NODE_ARTICLE => Some(NodeKind::Article),
        WG_NODE_CATEGORY => Some(NodeKind::Category),
        _ => None,
    }
}

fn edge_kind_from(value: i32) -> Option<EdgeKind> {
    match value {
        WG_EDGE_LINKS_TO => Some(EdgeKind::LinksTo),
        WG_EDGE_BELONGS_TO => Some(EdgeKind::BelongsTo),
        _ => None,
    }
}

fn direction_from(value: i32) -> Option<Direction> {
    match value {
        WG_DIR_OUT => Some(Direction::Out),
        WG_DIR_IN => Some(Direction::In),
        _ => None,
    }
}

fn format_from(value: i32) -> Option<ExportFormat> {
    match value {
        WG_FORMAT_CSV => Some(ExportFormat::EdgeListCsv),
        WG_FORMAT_JSON => Some(ExportFormat::JsonGraph),
        WG_FORMAT_GRAPHML => Some(ExportFormat::GraphMl),
        _ => None,
    }
}

/// Copies `items` into a caller buffer using the two-call pattern shared by
/// every array output.
unsafe fn write_ids(items: &[PageId], buf: *mut u64, cap: usize, out_len: *mut usize) -> i32 {
    if out_len.is_null() {
        return fail(WG_ERR_NULL_ARG, "out_len is null");
    }
    *out_len = items.len();
    if buf.is_null() {
        return WG_OK;
    }
    if cap < items.len() {
        return fail(
            WG_ERR_BUFFER_TOO_SMALL,
            format!("buffer holds {cap} ids, {} required", items.len()),
        );
    }
    let target = slice::from_raw_parts_mut(buf, items.len());
    for (slot, id) in target.iter_mut().zip(items) {
        *slot = id.0;
    }
    WG_OK
}

/// ABI version of this library.
#[no_mangle]
pub extern "C" fn wg_abi_version() -> u32 {
    WG_ABI_VERSION
}

/// Message of the most recent failing call on this thread. Never null;
/// empty before the first failure. The pointer stays valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn wg_last_error() -> *const c_char {
    LAST_ERROR.with(|cell| cell.borrow().as_ptr())
}

/// Loads a graph snapshot file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must point to writable
/// memory for one pointer. On success `*out` owns the graph until
/// `wg_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn wg_graph_load(path: *const c_char, out: *mut *mut WgGraph) -> i32 {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "path or out is null");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return fail(WG_ERR_UTF8, "path is not valid UTF-8"),
        };
        match load_snapshot(Path::new(path)) {
            Ok(graph) => {
                *out = Box::into_raw(Box::new(WgGraph(graph)));
                WG_OK
            }
            Err(err) => fail(snapshot_error_code(&err), err),
        }
    })
}

/// Releases a graph handle. Null is a no-op.
///
/// # Safety
/// `graph` must be a pointer returned by `wg_graph_load` that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn wg_graph_free(graph: *mut WgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Writes the snapshot's node and edge totals to `out`.
///
/// # Safety
/// `graph` must be a live handle; `out` must point to a `WgCounts`.
#[no_mangle]
pub unsafe extern "C" fn wg_graph_counts(graph: *const WgGraph, out: *mut WgCounts) -> i32 {
    guard(|| {
        if graph.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "graph or out is null");
        }
        let counts = (*graph).0.counts();
        *out = WgCounts {
            articles: counts.articles,
            categories: counts.categories,
            links_to: counts.links_to,
            belongs_to: counts.belongs_to,
        };
        WG_OK
    })
}

/// Resolves a byte-exact title of the given kind (`WG_NODE_*`) to a page id.
///
/// # Safety
/// `graph` must be a live handle; `title` must point to `title_len` readable
/// bytes; `out_id` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_lookup_title(
    graph: *const WgGraph,
    kind: i32,
    title: *const u8,
    title_len: usize,
    out_id: *mut u64,
) -> i32 {
    guard(|| {
        if graph.is_null() || title.is_null() || out_id.is_null() {
            return fail(WG_ERR_NULL_ARG, "graph, title, or out_id is null");
        }
        let Some(kind) = node_kind_from(kind) else {
            return fail(WG_ERR_INVALID_ARG, format!("unknown node kind {kind}"));
        };
        let bytes = slice::from_raw_parts(title, title_len);
        match (*graph).0.lookup_title(kind, &Title::from(bytes)) {
            Some(node) => {
                *out_id = node.id.0;
                WG_OK
            }
            None => fail(
                WG_ERR_NOT_FOUND,
                format!("no {kind} titled `{}`", String::from_utf8_lossy(bytes)),
            ),
        }
    })
}

/// Writes the neighbor page ids of `page_id` over one edge kind and
/// direction. Two-call pattern: a null `buf` only reports the length.
///
/// # Safety
/// `graph` must be a live handle; `buf`, when non-null, must hold `cap`
/// writable u64 slots; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_neighbors(
    graph: *const WgGraph,
    page_id: u64,
    edge_kind: i32,
    direction: i32,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> i32 {
    guard(|| {
        if graph.is_null() {
            return fail(WG_ERR_NULL_ARG, "graph is null");
        }
        let Some(kind) = edge_kind_from(edge_kind) else {
            return fail(WG_ERR_INVALID_ARG, format!("unknown edge kind {edge_kind}"));
        };
        let Some(direction) = direction_from(direction) else {
            return fail(WG_ERR_INVALID_ARG, format!("unknown direction {direction}"));
        };
        match (*graph).0.neighbors(PageId(page_id), kind, direction) {
            Ok(ids) => write_ids(&ids, buf, cap, out_len),
            Err(err) => fail(WG_ERR_NOT_FOUND, err),
        }
    })
}

fn engine(graph: &GraphSnapshot, node_ceiling: u64) -> QueryEngine<'_> {
    let engine = QueryEngine::new(graph);
    if node_ceiling == 0 {
        engine
    } else {
        engine.with_node_ceiling(node_ceiling as usize)
    }
}

/// Runs a category closure from `root`. `depth < 0` means unlimited;
/// `node_ceiling == 0` keeps the default (1,000,000).
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable. On success `*out`
/// owns the subgraph until `wg_subgraph_free`.
#[no_mangle]
pub unsafe extern "C" fn wg_category_closure(
    graph: *const WgGraph,
    root: u64,
    depth: i64,
    node_ceiling: u64,
    out: *mut *mut WgSubgraph,
) -> i32 {
    guard(|| {
        if graph.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "graph or out is null");
        }
        let depth = if depth < 0 {
            DepthSpec::Unlimited
        } else if depth <= u32::MAX as i64 {
            DepthSpec::Bounded(depth as u32)
        } else {
            return fail(WG_ERR_INVALID_ARG, format!("depth {depth} out of range"));
        };
        match engine(&(*graph).0, node_ceiling).category_closure(PageId(root), depth) {
            Ok(sub) => {
                *out = Box::into_raw(Box::new(WgSubgraph(sub)));
                WG_OK
            }
            Err(err) => fail(query_error_code(&err), err),
        }
    })
}

/// Runs a links_to neighborhood from `root`. `max_out_degree < 0` disables
/// the expansion cap; `node_ceiling == 0` keeps the default.
///
/// # Safety
/// Same contract as `wg_category_closure`.
#[no_mangle]
pub unsafe extern "C" fn wg_neighborhood(
    graph: *const WgGraph,
    root: u64,
    depth: u32,
    max_out_degree: i64,
    node_ceiling: u64,
    out: *mut *mut WgSubgraph,
) -> i32 {
    guard(|| {
        if graph.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "graph or out is null");
        }
        let cap = if max_out_degree < 0 {
            None
        } else {
            Some(max_out_degree as u64)
        };
        match engine(&(*graph).0, node_ceiling).neighborhood(PageId(root), depth, cap) {
            Ok(sub) => {
                *out = Box::into_raw(Box::new(WgSubgraph(sub)));
                WG_OK
            }
            Err(err) => fail(query_error_code(&err), err),
        }
    })
}

/// Releases a subgraph handle. Null is a no-op.
///
/// # Safety
/// `sub` must be a pointer returned by a query that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_free(sub: *mut WgSubgraph) {
    if !sub.is_null() {
        drop(Box::from_raw(sub));
    }
}

/// Writes the subgraph statistics to `out`.
///
/// # Safety
/// `sub` must be a live handle; `out` must point to a `WgStats`.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_stats(sub: *const WgSubgraph, out: *mut WgStats) -> i32 {
    guard(|| {
        if sub.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "sub or out is null");
        }
        let stats = (*sub).0.stats;
        *out = WgStats {
            articles: stats.articles,
            subcategories: stats.subcategories,
            hyperlinks: stats.hyperlinks,
        };
        WG_OK
    })
}

/// Number of nodes in the subgraph.
///
/// # Safety
/// `sub` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_node_count(sub: *const WgSubgraph, out: *mut u64) -> i32 {
    guard(|| {
        if sub.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "sub or out is null");
        }
        *out = (*sub).0.nodes.len() as u64;
        WG_OK
    })
}

/// Number of edges in the subgraph (both kinds).
///
/// # Safety
/// `sub` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_edge_count(sub: *const WgSubgraph, out: *mut u64) -> i32 {
    guard(|| {
        if sub.is_null() || out.is_null() {
            return fail(WG_ERR_NULL_ARG, "sub or out is null");
        }
        *out = (*sub).0.edges.len() as u64;
        WG_OK
    })
}

/// Writes the subgraph's node ids in ascending order. Two-call pattern.
///
/// # Safety
/// `sub` must be a live handle; `buf`, when non-null, must hold `cap`
/// writable u64 slots; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_node_ids(
    sub: *const WgSubgraph,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> i32 {
    guard(|| {
        if sub.is_null() {
            return fail(WG_ERR_NULL_ARG, "sub is null");
        }
        let ids: Vec<PageId> = (*sub).0.nodes.iter().map(|n| n.id).collect();
        write_ids(&ids, buf, cap, out_len)
    })
}

/// Exports the subgraph to a file in the given `WG_FORMAT_*`.
///
/// # Safety
/// `sub` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wg_subgraph_export(
    sub: *const WgSubgraph,
    format: i32,
    path: *const c_char,
) -> i32 {
    guard(|| {
        if sub.is_null() || path.is_null() {
            return fail(WG_ERR_NULL_ARG, "sub or path is null");
        }
        let Some(format) = format_from(format) else {
            return fail(WG_ERR_INVALID_ARG, format!("unknown format {format}"));
        };
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return fail(WG_ERR_UTF8, "path is not valid UTF-8"),
        };
        let file = match std::fs::File::create(path) {
            Ok(f) => f,
            Err(err) => return fail(WG_ERR_IO, format!("{path}: {err}")),
        };
        let mut writer = std::io::BufWriter::new(file);
        if let Err(err) = export(&(*sub).0, format, &mut writer) {
            return fail(WG_ERR_EXPORT, err);
        }
        if let Err(err) = std::io::Write::flush(&mut writer) {
            return fail(WG_ERR_IO, err);
        }
        WG_OK
    })
}
