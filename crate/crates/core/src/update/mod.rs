//! Snapshot evolution: diffing two graphs, applying a validated delta, and
//! freezing a (graph, time-series) pair under an immutable label.
//!
//! A delta is the minimal symmetric difference between two snapshots. A
//! title or kind change surfaces as a removal plus an addition of the same
//! id, so page ids stay stable across renames. Application validates the
//! whole delta before touching anything and reports every violation at
//! once, not just the first.

mod registry;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{build_graph, GraphError, GraphSnapshot, SnapshotFileError};
use crate::timeseries::{
    DailyThresholdPolicy, IngestSummary, PagecountRecord, TimeseriesStore, TsError,
};
use crate::types::{Edge, EdgeKind, Node, PageId};

pub use registry::{DayCoverage, FreezeRecord, FreezeRegistry};

/// The difference between two snapshots. Applying it to the older one
/// reproduces the newer one's content exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphDelta {
    pub nodes_added: Vec<Node>,
    pub nodes_removed: Vec<PageId>,
    pub edges_added: Vec<Edge>,
    pub edges_removed: Vec<Edge>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.nodes_added.is_empty()
            && self.nodes_removed.is_empty()
            && self.edges_added.is_empty()
            && self.edges_removed.is_empty()
    }

    /// Total number of individual changes.
    pub fn change_count(&self) -> usize {
        self.nodes_added.len()
            + self.nodes_removed.len()
            + self.edges_added.len()
            + self.edges_removed.len()
    }
}

/// One reason a delta cannot be applied to a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum DeltaViolation {
    RemovedNodeMissing { id: PageId },
    AddedNodeExists { id: PageId },
    AddedNodeDuplicated { id: PageId },
    RemovedEdgeMissing { edge: (PageId, PageId, EdgeKind) },
    AddedEdgeExists { edge: (PageId, PageId, EdgeKind) },
    DanglingEdge { edge: (PageId, PageId, EdgeKind) },
}

impl fmt::Display for DeltaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edge = |e: &(PageId, PageId, EdgeKind)| format!("({} -{}-> {})", e.0, e.2, e.1);
        match self {
            DeltaViolation::RemovedNodeMissing { id } => {
                write!(f, "removed node {id} does not exist")
            }
            DeltaViolation::AddedNodeExists { id } => {
                write!(f, "added node {id} already exists and is not removed")
            }
            DeltaViolation::AddedNodeDuplicated { id } => {
                write!(f, "node {id} added more than once")
            }
            DeltaViolation::RemovedEdgeMissing { edge: e } => {
                write!(f, "removed edge {} does not exist", edge(e))
            }
            DeltaViolation::AddedEdgeExists { edge: e } => {
                write!(f, "added edge {} already exists and is not removed", edge(e))
            }
            DeltaViolation::DanglingEdge { edge: e } => {
                write!(f, "edge {} would dangle after applying the delta", edge(e))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("delta validation failed with {} violation(s): {}", .0.len(), format_violations(.0))]
    Validation(Vec<DeltaViolation>),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotFileError),
    #[error(transparent)]
    Ts(#[from] TsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("registry index: {0}")]
    Json(#[from] serde_json::Error),
    #[error("label `{0}` is already frozen")]
    DuplicateLabel(String),
    #[error("label `{0}` is not frozen in this registry")]
    UnknownLabel(String),
    #[error("label `{0}` is not usable as a directory name (allowed: A-Z a-z 0-9 . _ -)")]
    InvalidLabel(String),
    #[error("frozen bundle for `{label}` does not match its registry record: {reason}")]
    BundleMismatch { label: String, reason: String },
}

fn format_violations(violations: &[DeltaViolation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    if violations.len() > 5 {
        parts.push(format!("... and {} more", violations.len() - 5));
    }
    parts.join("; ")
}

fn all_edges(graph: &GraphSnapshot) -> Vec<Edge> {
    let mut edges: Vec<Edge> = graph
        .edges(EdgeKind::LinksTo)
        .chain(graph.edges(EdgeKind::BelongsTo))
        .collect();
    edges.sort_unstable();
    edges
}

/// Minimal symmetric difference turning `old` into `new`. Nodes are compared
/// by value: a node present in both with a different title or kind becomes a
/// removal plus an addition under the same id. Output vectors are sorted.
pub fn diff_graphs(old: &GraphSnapshot, new: &GraphSnapshot) -> GraphDelta {
    let mut delta = GraphDelta::default();

    let mut old_nodes = old.nodes().iter().peekable();
    let mut new_nodes = new.nodes().iter().peekable();
    loop {
        match (old_nodes.peek(), new_nodes.peek()) {
            (Some(o), Some(n)) => {
                if o.id < n.id {
                    delta.nodes_removed.push(o.id);
                    old_nodes.next();
                } else if n.id < o.id {
                    delta.nodes_added.push((*n).clone());
                    new_nodes.next();
                } else {
                    if o != n {
                        delta.nodes_removed.push(o.id);
                        delta.nodes_added.push((*n).clone());
                    }
                    old_nodes.next();
                    new_nodes.next();
                }
            }
            (Some(o), None) => {
                delta.nodes_removed.push(o.id);
                old_nodes.next();
            }
            (None, Some(n)) => {
                delta.nodes_added.push((*n).clone());
                new_nodes.next();
            }
            (None, None) => break,
        }
    }

    let old_edges = all_edges(old);
    let new_edges = all_edges(new);
    let mut oi = old_edges.iter().peekable();
    let mut ni = new_edges.iter().peekable();
    loop {
        match (oi.peek(), ni.peek()) {
            (Some(o), Some(n)) => {
                if o < n {
                    delta.edges_removed.push(**o);
                    oi.next();
                } else if n < o {
                    delta.edges_added.push(**n);
                    ni.next();
                } else {
                    oi.next();
                    ni.next();
                }
            }
            (Some(o), None) => {
                delta.edges_removed.push(**o);
                oi.next();
            }
            (None, Some(n)) => {
                delta.edges_added.push(**n);
                ni.next();
            }
            (None, None) => break,
        }
    }
    delta
}

/// Applies `delta` to `old`, producing a new snapshot labelled `new_label`.
/// The delta is validated in full first; every violation is collected before
/// the error returns, so a bad batch can be fixed in one pass.
pub fn apply_delta(
    old: &GraphSnapshot,
    delta: &GraphDelta,
    new_label: &str,
) -> Result<GraphSnapshot, UpdateError> {
    let mut violations = Vec::new();

    let removed_nodes: HashSet<PageId> = delta.nodes_removed.iter().copied().collect();
    for &id in &delta.nodes_removed {
        if !old.contains(id) {
            violations.push(DeltaViolation::RemovedNodeMissing { id });
        }
    }
    let mut added_ids = HashSet::new();
    for node in &delta.nodes_added {
        if !added_ids.insert(node.id) {
            violations.push(DeltaViolation::AddedNodeDuplicated { id: node.id });
        }
        if old.contains(node.id) && !removed_nodes.contains(&node.id) {
            violations.push(DeltaViolation::AddedNodeExists { id: node.id });
        }
    }

    let old_edges: HashSet<Edge> = all_edges(old).into_iter().collect();
    let removed_edges: HashSet<Edge> = delta.edges_removed.iter().copied().collect();
    for edge in &delta.edges_removed {
        if !old_edges.contains(edge) {
            violations.push(DeltaViolation::RemovedEdgeMissing {
                edge: (edge.source, edge.target, edge.kind),
            });
        }
    }
    for edge in &delta.edges_added {
        if old_edges.contains(edge) && !removed_edges.contains(edge) {
            violations.push(DeltaViolation::AddedEdgeExists {
                edge: (edge.source, edge.target, edge.kind),
            });
        }
    }

    // final sets, then dangling checks against them
    let mut final_nodes: BTreeMap<PageId, Node> = old
        .nodes()
        .iter()
        .filter(|n| !removed_nodes.contains(&n.id))
        .map(|n| (n.id, n.clone()))
        .collect();
    for node in &delta.nodes_added {
        final_nodes.insert(node.id, node.clone());
    }
    let final_edges: Vec<Edge> = old_edges
        .iter()
        .filter(|e| !removed_edges.contains(e))
        .chain(delta.edges_added.iter())
        .copied()
        .collect();
    for edge in &final_edges {
        if !final_nodes.contains_key(&edge.source) || !final_nodes.contains_key(&edge.target) {
            violations.push(DeltaViolation::DanglingEdge {
                edge: (edge.source, edge.target, edge.kind),
            });
        }
    }

    if !violations.is_empty() {
        violations.sort_by_key(|v| format!("{v:?}"));
        return Err(UpdateError::Validation(violations));
    }

    let nodes: Vec<Node> = final_nodes.into_values().collect();
    Ok(build_graph(nodes, &final_edges, new_label)?)
}

/// Appends one day of viewership to the store. Replace-on-reingest semantics
/// (later data for pages already stored that day wins) live in the store.
pub fn append_day(
    store: &mut TimeseriesStore,
    day: NaiveDate,
    records: &[PagecountRecord],
    policy: DailyThresholdPolicy,
    unresolved_titles: u64,
) -> Result<IngestSummary, TsError> {
    store.ingest_day(day, records, policy, unresolved_titles)
}
