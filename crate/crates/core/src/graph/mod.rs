//! Immutable typed graph snapshots.
//!
//! A snapshot holds article and category nodes plus `links_to` and
//! `belongs_to` edges in compressed sparse rows, one per edge kind and
//! direction, so neighbor access is O(degree) in either direction. Nodes are
//! stored sorted by id and addressed internally by position; positions are
//! never exposed outside the crate. A snapshot is identified by its content
//! hash, computed over the sorted node and edge sets and independent of the
//! human-facing label.

mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::{Direction, Edge, EdgeKind, Node, NodeKind, PageId, SnapshotId, Title};

pub use io::{load_snapshot, save_snapshot, SnapshotFileError};

/// Stored node and edge totals, exposed as JSON by the CLI `stats` command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub articles: u64,
    pub categories: u64,
    pub links_to: u64,
    pub belongs_to: u64,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(PageId),
    #[error("duplicate {kind} title \"{title}\"")]
    DuplicateTitle { kind: NodeKind, title: Title },
    #[error("edge {0} references a node that does not exist")]
    UnknownEndpoint(Edge),
    #[error("edge {edge} violates the {} constraint: endpoints are {source_kind} -> {target_kind}", edge.kind)]
    KindViolation {
        edge: Edge,
        source_kind: NodeKind,
        target_kind: NodeKind,
    },
    #[error("node {0} not found")]
    NodeNotFound(PageId),
}

/// Compressed sparse rows over node positions. `offsets` has one entry per
/// node plus a terminator; `targets` holds neighbor positions, ascending
/// within each row because position order equals id order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u64>,
    targets: Vec<u32>,
}

impl Csr {
    /// Builds from pairs sorted by (row, target) with no duplicates.
    fn from_sorted_pairs(node_count: usize, pairs: &[(u32, u32)]) -> Csr {
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut targets = Vec::with_capacity(pairs.len());
        offsets.push(0u64);
        let mut row = 0u32;
        for &(source, target) in pairs {
            debug_assert!((source as usize) < node_count);
            while row < source {
                offsets.push(targets.len() as u64);
                row += 1;
            }
            targets.push(target);
        }
        while offsets.len() < node_count + 1 {
            offsets.push(targets.len() as u64);
        }
        Csr { offsets, targets }
    }

    fn row(&self, pos: u32) -> &[u32] {
        let start = self.offsets[pos as usize] as usize;
        let end = self.offsets[pos as usize + 1] as usize;
        &self.targets[start..end]
    }

    fn edge_count(&self) -> u64 {
        self.targets.len() as u64
    }
}

fn adj_slot(kind: EdgeKind, direction: Direction) -> usize {
    match (kind, direction) {
        (EdgeKind::LinksTo, Direction::Out) => 0,
        (EdgeKind::LinksTo, Direction::In) => 1,
        (EdgeKind::BelongsTo, Direction::Out) => 2,
        (EdgeKind::BelongsTo, Direction::In) => 3,
    }
}

fn title_slot(kind: NodeKind) -> usize {
    match kind {
        NodeKind::Article => 0,
        NodeKind::Category => 1,
    }
}

/// Fixed-size bitmap over node positions.
pub(crate) struct PositionSet {
    words: Vec<u64>,
}

impl PositionSet {
    pub(crate) fn new(node_count: usize) -> Self {
        PositionSet { words: vec![0; node_count.div_ceil(64)] }
    }

    pub(crate) fn insert(&mut self, pos: u32) -> bool {
        let word = &mut self.words[pos as usize / 64];
        let bit = 1u64 << (pos % 64);
        let fresh = *word & bit == 0;
        *word |= bit;
        fresh
    }

    pub(crate) fn contains(&self, pos: u32) -> bool {
        self.words[pos as usize / 64] & (1u64 << (pos % 64)) != 0
    }
}

/// An immutable graph snapshot. Safe to share across threads; mutation means
/// building a new snapshot.
///
/// Debug output stays small on purpose: id and counts, never the node table.
pub struct GraphSnapshot {
    id: SnapshotId,
    nodes: Vec<Node>,
    pos_by_id: HashMap<PageId, u32>,
    pos_by_title: [HashMap<Title, u32>; 2],
    adj: [Csr; 4],
    counts: GraphCounts,
}

/// Builds a snapshot from a node set and an edge set. The edge sequence is
/// treated as a set: duplicates collapse, and input order never affects the
/// result. Fails on duplicate ids or (kind, title) pairs, on edges whose
/// endpoints are not in the node set, and on edges whose endpoint kinds
/// violate their edge kind.
pub fn build_graph(
    mut nodes: Vec<Node>,
    edges: &[Edge],
    label: &str,
) -> Result<GraphSnapshot, GraphError> {
    nodes.sort_by_key(|n| n.id);
    for pair in nodes.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(GraphError::DuplicateNodeId(pair[0].id));
        }
    }
    let mut pos_by_id = HashMap::with_capacity(nodes.len());
    let mut pos_by_title: [HashMap<Title, u32>; 2] = [HashMap::new(), HashMap::new()];
    let mut articles = 0u64;
    for (pos, node) in nodes.iter().enumerate() {
        let pos = pos as u32;
        pos_by_id.insert(node.id, pos);
        if pos_by_title[title_slot(node.kind)]
            .insert(node.title.clone(), pos)
            .is_some()
        {
            return Err(GraphError::DuplicateTitle {
                kind: node.kind,
                title: node.title.clone(),
            });
        }
        if node.kind == NodeKind::Article {
            articles += 1;
        }
    }

    let mut pairs: [Vec<(u32, u32)>; 2] = [Vec::new(), Vec::new()];
    for edge in edges {
        let (Some(&s), Some(&t)) = (pos_by_id.get(&edge.source), pos_by_id.get(&edge.target))
        else {
            return Err(GraphError::UnknownEndpoint(*edge));
        };
        let source_kind = nodes[s as usize].kind;
        let target_kind = nodes[t as usize].kind;
        if !edge.kind.endpoints_valid(source_kind, target_kind) {
            return Err(GraphError::KindViolation { edge: *edge, source_kind, target_kind });
        }
        let slot = match edge.kind {
            EdgeKind::LinksTo => 0,
            EdgeKind::BelongsTo => 1,
        };
        pairs[slot].push((s, t));
    }

    let mut adj: Vec<Csr> = Vec::with_capacity(4);
    for forward in pairs.iter_mut() {
        forward.sort_unstable();
        forward.dedup();
        adj.push(Csr::from_sorted_pairs(nodes.len(), forward));
        let mut reverse: Vec<(u32, u32)> = forward.iter().map(|&(s, t)| (t, s)).collect();
        reverse.sort_unstable();
        adj.push(Csr::from_sorted_pairs(nodes.len(), &reverse));
    }
    let adj: [Csr; 4] = adj.try_into().expect("four adjacency sections");

    let counts = GraphCounts {
        articles,
        categories: nodes.len() as u64 - articles,
        links_to: adj[0].edge_count(),
        belongs_to: adj[2].edge_count(),
    };
    let hash = content_hash(&nodes, &adj);
    Ok(GraphSnapshot {
        id: SnapshotId::new(label, hash),
        nodes,
        pos_by_id,
        pos_by_title,
        adj,
        counts,
    })
}

/// Content hash over the sorted node set and the sorted edge set of each
/// kind. The label is deliberately excluded: equal content means equal hash.
fn content_hash(nodes: &[Node], adj: &[Csr; 4]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"wikigraph.content.v1");
    hasher.update((nodes.len() as u64).to_le_bytes());
    for node in nodes {
        hasher.update(node.id.0.to_le_bytes());
        hasher.update([match node.kind {
            NodeKind::Article => 0u8,
            NodeKind::Category => 1u8,
        }]);
        hasher.update((node.title.len() as u32).to_le_bytes());
        hasher.update(node.title.as_bytes());
    }
    for (tag, slot) in [(0u8, 0usize), (1u8, 2usize)] {
        let csr = &adj[slot];
        hasher.update([tag]);
        hasher.update(csr.edge_count().to_le_bytes());
        for source in 0..nodes.len() as u32 {
            let source_id = nodes[source as usize].id.0;
            for &target in csr.row(source) {
                hasher.update(source_id.to_le_bytes());
                hasher.update(nodes[target as usize].id.0.to_le_bytes());
            }
        }
    }
    hasher.finalize().into()
}

impl std::fmt::Debug for GraphSnapshot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphSnapshot")
            .field("id", &self.id.short())
            .field("counts", &self.counts)
            .finish_non_exhaustive()
    }
}

impl GraphSnapshot {
    pub fn id(&self) -> &SnapshotId {
        &self.id
    }

    pub fn counts(&self) -> GraphCounts {
        self.counts
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes sorted by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn contains(&self, id: PageId) -> bool {
        self.pos_by_id.contains_key(&id)
    }

    pub fn lookup_id(&self, id: PageId) -> Option<&Node> {
        self.pos_by_id.get(&id).map(|&p| &self.nodes[p as usize])
    }

    pub fn lookup_title(&self, kind: NodeKind, title: &Title) -> Option<&Node> {
        self.pos_by_title[title_slot(kind)]
            .get(title)
            .map(|&p| &self.nodes[p as usize])
    }

    /// Neighbor ids, ascending. O(degree) plus the output allocation.
    pub fn neighbors(
        &self,
        id: PageId,
        kind: EdgeKind,
        direction: Direction,
    ) -> Result<Vec<PageId>, GraphError> {
        let pos = self
            .pos_by_id
            .get(&id)
            .copied()
            .ok_or(GraphError::NodeNotFound(id))?;
        Ok(self
            .neighbor_positions(pos, kind, direction)
            .iter()
            .map(|&p| self.nodes[p as usize].id)
            .collect())
    }

    /// Edges of one kind with BOTH endpoints in `ids`, sorted by (source,
    /// target). Ids not present in the snapshot are ignored. Runs in
    /// O(Σ degree of the member nodes), not O(|E|).
    pub fn induced_edges(&self, ids: &[PageId], kind: EdgeKind) -> Vec<Edge> {
        let mut members: Vec<u32> = ids
            .iter()
            .filter_map(|id| self.pos_by_id.get(id).copied())
            .collect();
        members.sort_unstable();
        members.dedup();
        let mut set = PositionSet::new(self.nodes.len());
        for &pos in &members {
            set.insert(pos);
        }
        let mut edges = Vec::new();
        for &source in &members {
            for &target in self.neighbor_positions(source, kind, Direction::Out) {
                if set.contains(target) {
                    edges.push(Edge {
                        source: self.nodes[source as usize].id,
                        target: self.nodes[target as usize].id,
                        kind,
                    });
                }
            }
        }
        edges
    }

    /// All stored edges of one kind, sorted by (source, target).
    pub fn edges(&self, kind: EdgeKind) -> impl Iterator<Item = Edge> + '_ {
        let csr = &self.adj[adj_slot(kind, Direction::Out)];
        (0..self.nodes.len() as u32).flat_map(move |source| {
            csr.row(source).iter().map(move |&target| Edge {
                source: self.nodes[source as usize].id,
                target: self.nodes[target as usize].id,
                kind,
            })
        })
    }

    pub(crate) fn position_of(&self, id: PageId) -> Option<u32> {
        self.pos_by_id.get(&id).copied()
    }

    pub(crate) fn node_at(&self, pos: u32) -> &Node {
        &self.nodes[pos as usize]
    }

    pub(crate) fn neighbor_positions(
        &self,
        pos: u32,
        kind: EdgeKind,
        direction: Direction,
    ) -> &[u32] {
        self.adj[adj_slot(kind, direction)].row(pos)
    }

    /// Same nodes and edges under a different label; the content hash is
    /// unchanged by construction.
    pub fn relabel(&self, label: &str) -> SnapshotId {
        SnapshotId::new(label, self.id.content_hash)
    }
}
