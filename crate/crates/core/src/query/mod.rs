//! Subgraph queries over a graph snapshot plus the viewership store.
//!
//! Two traversals produce subgraphs: the category closure (reverse
//! `belongs_to` BFS from a root category) and the article neighborhood
//! (forward `links_to` BFS with an optional expansion cap). Both run with a
//! visited set, so cyclic inputs terminate, and both respect a node-count
//! ceiling that turns runaway traversals into an error instead of an
//! hours-long query. Filtering by visits and series attachment compose on
//! the result, and export renders it deterministically.

mod export;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphSnapshot, PositionSet};
use crate::timeseries::{TimeseriesStore, TsError};
use crate::types::{Direction, Edge, EdgeKind, Node, NodeKind, PageId, SnapshotId};

pub use export::{export, parse_edge_list_csv, ExportError, ExportFormat};

/// Default ceiling on the number of nodes a single traversal may include.
pub const DEFAULT_NODE_CEILING: usize = 1_000_000;

/// Traversal depth: a hop bound or unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthSpec {
    Bounded(u32),
    Unlimited,
}

impl DepthSpec {
    fn allows(&self, hop: u32) -> bool {
        match self {
            DepthSpec::Bounded(d) => hop <= *d,
            DepthSpec::Unlimited => true,
        }
    }
}

impl std::fmt::Display for DepthSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DepthSpec::Bounded(d) => write!(f, "{d}"),
            DepthSpec::Unlimited => f.write_str("unlimited"),
        }
    }
}

/// Which query produced a subgraph. The subcategory statistic reads
/// differently per origin: a closure counts its member categories (root
/// excluded), a neighborhood counts the distinct categories its member
/// articles directly belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgraphOrigin {
    CategoryClosure { root: PageId },
    Neighborhood { root: PageId },
}

/// Subgraph size statistics, mirrored by the CLI stats line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SubgraphStats {
    pub articles: u64,
    pub subcategories: u64,
    pub hyperlinks: u64,
}

/// Where a subgraph came from: the query description, the snapshot it ran
/// against, and the parameters, so an exported file is self-describing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub query: String,
    pub snapshot: SnapshotId,
    pub parameters: BTreeMap<String, String>,
}

/// A query result: nodes sorted by id, edges induced on them, stats,
/// provenance, and optionally per-node viewership series.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub stats: SubgraphStats,
    pub provenance: Provenance,
    pub origin: SubgraphOrigin,
    pub series: Option<BTreeMap<PageId, Vec<(DateTime<Utc>, u32)>>>,
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("node {0} not found in snapshot")]
    NotFound(PageId),
    #[error("node {id} is a {found}, expected a {expected}")]
    WrongKind {
        id: PageId,
        expected: NodeKind,
        found: NodeKind,
    },
    #[error("traversal exceeded the node ceiling ({ceiling}): {included} nodes included before aborting")]
    BudgetExceeded { included: usize, ceiling: usize },
    #[error(transparent)]
    Ts(#[from] TsError),
}

/// Read-only query façade over one snapshot.
pub struct QueryEngine<'a> {
    graph: &'a GraphSnapshot,
    node_ceiling: usize,
}

impl<'a> QueryEngine<'a> {
    pub fn new(graph: &'a GraphSnapshot) -> Self {
        QueryEngine { graph, node_ceiling: DEFAULT_NODE_CEILING }
    }

    pub fn with_node_ceiling(mut self, ceiling: usize) -> Self {
        self.node_ceiling = ceiling;
        self
    }

    fn require_kind(&self, id: PageId, expected: NodeKind) -> Result<u32, QueryError> {
        let pos = self.graph.position_of(id).ok_or(QueryError::NotFound(id))?;
        let found = self.graph.node_at(pos).kind;
        if found != expected {
            return Err(QueryError::WrongKind { id, expected, found });
        }
        Ok(pos)
    }

    /// Subcategories within `depth` hops below the root plus every article
    /// belonging to the root or any included subcategory. Depth 0 is the
    /// root and its direct articles. Edges are the induced `links_to` among
    /// included articles plus the induced `belongs_to` on the node set.
    pub fn category_closure(
        &self,
        root: PageId,
        depth: DepthSpec,
    ) -> Result<Subgraph, QueryError> {
        let root_pos = self.require_kind(root, NodeKind::Category)?;
        let mut visited = PositionSet::new(self.graph.node_count());
        visited.insert(root_pos);
        let mut members = vec![root_pos];
        let mut categories = vec![root_pos];
        let mut frontier = vec![root_pos];
        let mut hop = 0u32;
        while !frontier.is_empty() && depth.allows(hop + 1) {
            hop += 1;
            let mut next = Vec::new();
            for &cat in &frontier {
                for &child in self
                    .graph
                    .neighbor_positions(cat, EdgeKind::BelongsTo, Direction::In)
                {
                    if self.graph.node_at(child).kind == NodeKind::Category
                        && visited.insert(child)
                    {
                        next.push(child);
                        categories.push(child);
                        members.push(child);
                        self.check_budget(members.len())?;
                    }
                }
            }
            frontier = next;
        }
        for &cat in &categories {
            for &child in self
                .graph
                .neighbor_positions(cat, EdgeKind::BelongsTo, Direction::In)
            {
                if self.graph.node_at(child).kind == NodeKind::Article && visited.insert(child) {
                    members.push(child);
                    self.check_budget(members.len())?;
                }
            }
        }

        let mut parameters = BTreeMap::new();
        parameters.insert("root".to_string(), root.to_string());
        parameters.insert("depth".to_string(), depth.to_string());
        Ok(self.subgraph_from_members(
            members,
            SubgraphOrigin::CategoryClosure { root },
            format!("category_closure(root={root}, depth={depth})"),
            parameters,
            true,
        ))
    }

    /// Articles within `depth` `links_to` hops of the root. A frontier node
    /// whose out-degree exceeds `max_out_degree` is kept but not expanded;
    /// the cap never applies to the root itself. Edges are the induced
    /// `links_to` on the final node set.
    pub fn neighborhood(
        &self,
        root: PageId,
        depth: u32,
        max_out_degree: Option<u64>,
    ) -> Result<Subgraph, QueryError> {
        let root_pos = self.require_kind(root, NodeKind::Article)?;
        let mut visited = PositionSet::new(self.graph.node_count());
        visited.insert(root_pos);
        let mut members = vec![root_pos];
        let mut frontier = vec![root_pos];
        for hop in 1..=depth {
            let mut next = Vec::new();
            for &u in &frontier {
                let out = self.graph.neighbor_positions(u, EdgeKind::LinksTo, Direction::Out);
                let capped = hop > 1
                    && max_out_degree.is_some_and(|cap| out.len() as u64 > cap);
                if capped {
                    continue;
                }
                for &v in out {
                    if visited.insert(v) {
                        next.push(v);
                        members.push(v);
                        self.check_budget(members.len())?;
                    }
                }
            }
            frontier = next;
        }

        let mut parameters = BTreeMap::new();
        parameters.insert("root".to_string(), root.to_string());
        parameters.insert("depth".to_string(), depth.to_string());
        parameters.insert(
            "max_out_degree".to_string(),
            max_out_degree.map_or("unlimited".to_string(), |c| c.to_string()),
        );
        Ok(self.subgraph_from_members(
            members,
            SubgraphOrigin::Neighborhood { root },
            format!(
                "neighborhood(root={root}, depth={depth}, max_out_degree={})",
                max_out_degree.map_or("unlimited".to_string(), |c| c.to_string())
            ),
            parameters,
            false,
        ))
    }

    /// Keeps only nodes whose stored visits in [start, end) sum to strictly
    /// more than `total_threshold`; categories are treated like any other
    /// page. Edges are re-induced on the survivors and stats recomputed.
    pub fn filter_by_visits(
        &self,
        sub: &Subgraph,
        store: &TimeseriesStore,
        total_threshold: u64,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Subgraph, QueryError> {
        let qualifying: HashSet<PageId> =
            store.pages_above(total_threshold, start, end)?.into_iter().collect();
        let nodes: Vec<Node> = sub
            .nodes
            .iter()
            .filter(|n| qualifying.contains(&n.id))
            .cloned()
            .collect();
        let kept: HashSet<PageId> = nodes.iter().map(|n| n.id).collect();
        // filtering the already-induced edge set equals re-inducing on the
        // smaller node set
        let edges: Vec<Edge> = sub
            .edges
            .iter()
            .filter(|e| kept.contains(&e.source) && kept.contains(&e.target))
            .copied()
            .collect();
        let stats = self.compute_stats(&nodes, &edges, sub.origin);
        let mut provenance = sub.provenance.clone();
        provenance.query = format!(
            "filter_by_visits({}, threshold={total_threshold}, start={start}, end={end})",
            provenance.query
        );
        provenance
            .parameters
            .insert("visits_threshold".to_string(), total_threshold.to_string());
        provenance
            .parameters
            .insert("visits_start".to_string(), start.timestamp().to_string());
        provenance
            .parameters
            .insert("visits_end".to_string(), end.timestamp().to_string());
        Ok(Subgraph {
            nodes,
            edges,
            stats,
            provenance,
            origin: sub.origin,
            series: None,
        })
    }

    /// Attaches per-node series over [start, end). Every node gets an entry;
    /// nodes with nothing stored get an empty series.
    pub fn attach_series(
        &self,
        sub: &Subgraph,
        store: &TimeseriesStore,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Subgraph, QueryError> {
        let mut series = BTreeMap::new();
        for node in &sub.nodes {
            series.insert(node.id, store.query_range(node.id, start, end)?);
        }
        let mut out = sub.clone();
        out.series = Some(series);
        out.provenance
            .parameters
            .insert("series_start".to_string(), start.timestamp().to_string());
        out.provenance
            .parameters
            .insert("series_end".to_string(), end.timestamp().to_string());
        Ok(out)
    }

    fn check_budget(&self, included: usize) -> Result<(), QueryError> {
        if included > self.node_ceiling {
            return Err(QueryError::BudgetExceeded {
                included,
                ceiling: self.node_ceiling,
            });
        }
        Ok(())
    }

    fn subgraph_from_members(
        &self,
        mut members: Vec<u32>,
        origin: SubgraphOrigin,
        query: String,
        parameters: BTreeMap<String, String>,
        include_belongs_to: bool,
    ) -> Subgraph {
        members.sort_unstable();
        let nodes: Vec<Node> = members
            .iter()
            .map(|&p| self.graph.node_at(p).clone())
            .collect();
        let ids: Vec<PageId> = nodes.iter().map(|n| n.id).collect();
        let mut edges = self.graph.induced_edges(&ids, EdgeKind::LinksTo);
        if include_belongs_to {
            edges.extend(self.graph.induced_edges(&ids, EdgeKind::BelongsTo));
        }
        edges.sort_unstable();
        let stats = self.compute_stats(&nodes, &edges, origin);
        Subgraph {
            nodes,
            edges,
            stats,
            provenance: Provenance {
                query,
                snapshot: self.graph.id().clone(),
                parameters,
            },
            origin,
            series: None,
        }
    }

    fn compute_stats(
        &self,
        nodes: &[Node],
        edges: &[Edge],
        origin: SubgraphOrigin,
    ) -> SubgraphStats {
        let articles = nodes.iter().filter(|n| n.kind == NodeKind::Article).count() as u64;
        let hyperlinks = edges.iter().filter(|e| e.kind == EdgeKind::LinksTo).count() as u64;
        let subcategories = match origin {
            SubgraphOrigin::CategoryClosure { root } => nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Category && n.id != root)
                .count() as u64,
            SubgraphOrigin::Neighborhood { .. } => {
                let mut cats: HashSet<PageId> = HashSet::new();
                for node in nodes {
                    if node.kind != NodeKind::Article {
                        continue;
                    }
                    if let Some(pos) = self.graph.position_of(node.id) {
                        for &cat in self
                            .graph
                            .neighbor_positions(pos, EdgeKind::BelongsTo, Direction::Out)
                        {
                            cats.insert(self.graph.node_at(cat).id);
                        }
                    }
                }
                cats.len() as u64
            }
        };
        SubgraphStats { articles, subcategories, hyperlinks }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::timeseries::{DailyThresholdPolicy, PagecountRecord};
    use chrono::TimeZone;

    /// Science(100) <- Physics(101) <- Quantum(102); cycle Loop(103) <-> Physics.
    /// Articles: A1(1) in Science, A2(2) in Physics, A3(3) in Quantum,
    /// A4(4) in Physics and Quantum. Links: 1->2, 2->3, 3->4, 4->1, 2->4.
    fn fixture() -> GraphSnapshot {
        let nodes = vec![
            Node::article(1, "A1"),
            Node::article(2, "A2"),
            Node::article(3, "A3"),
            Node::article(4, "A4"),
            Node::category(100, "Science"),
            Node::category(101, "Physics"),
            Node::category(102, "Quantum"),
            Node::category(103, "Loop"),
        ];
        let edges = vec![
            Edge::belongs_to(101, 100),
            Edge::belongs_to(102, 101),
            Edge::belongs_to(103, 101),
            Edge::belongs_to(101, 103),
            Edge::belongs_to(1, 100),
            Edge::belongs_to(2, 101),
            Edge::belongs_to(3, 102),
            Edge::belongs_to(4, 101),
            Edge::belongs_to(4, 102),
            Edge::links_to(1, 2),
            Edge::links_to(2, 3),
            Edge::links_to(3, 4),
            Edge::links_to(4, 1),
            Edge::links_to(2, 4),
        ];
        build_graph(nodes, &edges, "fixture").unwrap()
    }

    fn ids(sub: &Subgraph) -> Vec<u64> {
        sub.nodes.iter().map(|n| n.id.0).collect()
    }

    #[test]
    fn closure_depth_zero_is_root_plus_direct_articles() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(100), DepthSpec::Bounded(0))
            .unwrap();
        assert_eq!(ids(&sub), vec![1, 100]);
        assert_eq!(
            sub.stats,
            SubgraphStats { articles: 1, subcategories: 0, hyperlinks: 0 }
        );
    }

    #[test]
    fn closure_depth_grows_monotonically() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let mut previous: HashSet<u64> = HashSet::new();
        for d in 0..=3 {
            let sub = engine
                .category_closure(PageId(100), DepthSpec::Bounded(d))
                .unwrap();
            let current: HashSet<u64> = ids(&sub).into_iter().collect();
            assert!(previous.is_subset(&current), "depth {d} lost nodes");
            previous = current;
        }
    }

    #[test]
    fn closure_depth_two_collects_nested_articles() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(100), DepthSpec::Bounded(2))
            .unwrap();
        // depth 2 from Science: Physics at hop 1, Quantum and Loop at hop 2
        assert_eq!(ids(&sub), vec![1, 2, 3, 4, 100, 101, 102, 103]);
        assert_eq!(sub.stats.articles, 4);
        assert_eq!(sub.stats.subcategories, 3);
        // induced links among articles 1..4: all five
        assert_eq!(sub.stats.hyperlinks, 5);
    }

    #[test]
    fn closure_terminates_on_cycles_unlimited() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(101), DepthSpec::Unlimited)
            .unwrap();
        // Physics pulls Loop and Quantum (cycle Physics<->Loop is harmless)
        assert!(ids(&sub).contains(&103));
        assert!(ids(&sub).contains(&102));
    }

    #[test]
    fn closure_counts_multi_membership_article_once() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(101), DepthSpec::Bounded(1))
            .unwrap();
        // article 4 belongs to both Physics and Quantum
        let count = ids(&sub).iter().filter(|&&id| id == 4).count();
        assert_eq!(count, 1);
    }

    #[test]
    fn closure_root_errors() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        assert!(matches!(
            engine.category_closure(PageId(999), DepthSpec::Bounded(1)),
            Err(QueryError::NotFound(PageId(999)))
        ));
        assert!(matches!(
            engine.category_closure(PageId(1), DepthSpec::Bounded(1)),
            Err(QueryError::WrongKind { .. })
        ));
    }

    #[test]
    fn closure_includes_belongs_to_edges() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(100), DepthSpec::Bounded(1))
            .unwrap();
        assert!(sub.edges.contains(&Edge::belongs_to(101, 100)));
        assert!(sub.edges.contains(&Edge::belongs_to(2, 101)));
    }

    #[test]
    fn neighborhood_depth_one_is_ego_net() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine.neighborhood(PageId(2), 1, None).unwrap();
        assert_eq!(ids(&sub), vec![2, 3, 4]);
        // induced: 2->3, 2->4, 3->4
        assert_eq!(sub.stats.hyperlinks, 3);
        // categories of members 2,3,4: Physics, Quantum
        assert_eq!(sub.stats.subcategories, 2);
    }

    #[test]
    fn neighborhood_cap_skips_expansion_not_membership() {
        // star: 1 -> 2..6 (degree 5), 2 -> 7
        let nodes: Vec<Node> = (1..=7)
            .map(|i| Node::article(i, &format!("N{i}")))
            .collect();
        let mut edges: Vec<Edge> = (2..=6).map(|t| Edge::links_to(1, t)).collect();
        edges.push(Edge::links_to(2, 7));
        let g = build_graph(nodes, &edges, "star").unwrap();
        let engine = QueryEngine::new(&g);

        // cap 3 smaller than the root's degree: root still expands fully
        let sub = engine.neighborhood(PageId(1), 1, Some(3)).unwrap();
        assert_eq!(ids(&sub), vec![1, 2, 3, 4, 5, 6]);

        // at depth 2 node 2 (degree 1) expands, so 7 joins
        let sub = engine.neighborhood(PageId(1), 2, Some(3)).unwrap();
        assert!(ids(&sub).contains(&7));

        // with cap 0 no non-root frontier node expands
        let sub = engine.neighborhood(PageId(1), 2, Some(0)).unwrap();
        assert_eq!(ids(&sub), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn neighborhood_wrong_kind() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        assert!(matches!(
            engine.neighborhood(PageId(100), 1, None),
            Err(QueryError::WrongKind { .. })
        ));
    }

    #[test]
    fn budget_exceeded() {
        let g = fixture();
        let engine = QueryEngine::new(&g).with_node_ceiling(2);
        let err = engine
            .category_closure(PageId(100), DepthSpec::Bounded(2))
            .unwrap_err();
        assert!(matches!(err, QueryError::BudgetExceeded { ceiling: 2, .. }));
    }

    fn hour(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 8, 1, h, 0, 0).unwrap()
    }

    fn store_with_counts(counts: &[(u64, u32)]) -> (tempfile::TempDir, TimeseriesStore) {
        let dir = tempfile::tempdir().unwrap();
        let mut store = TimeseriesStore::open(dir.path()).unwrap();
        let records: Vec<PagecountRecord> = counts
            .iter()
            .map(|&(page, count)| PagecountRecord {
                page_id: PageId(page),
                hour: hour(6),
                count,
            })
            .collect();
        store
            .ingest_day(
                chrono::NaiveDate::from_ymd_opt(2018, 8, 1).unwrap(),
                &records,
                DailyThresholdPolicy { threshold: 0 },
                0,
            )
            .unwrap();
        (dir, store)
    }

    #[test]
    fn filter_by_visits_keeps_qualifying_nodes() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(100), DepthSpec::Bounded(2))
            .unwrap();
        // pages 2 and 4 have visits; category 101 too
        let (_dir, store) = store_with_counts(&[(2, 500), (4, 300), (101, 250)]);
        let filtered = engine
            .filter_by_visits(&sub, &store, 100, hour(0), hour(23))
            .unwrap();
        assert_eq!(ids(&filtered), vec![2, 4, 101]);
        assert_eq!(
            filtered.edges,
            vec![
                Edge::links_to(2, 4),
                Edge::belongs_to(2, 101),
                Edge::belongs_to(4, 101),
            ]
        );
        assert_eq!(filtered.stats.articles, 2);
        assert_eq!(filtered.stats.subcategories, 1);
        assert_eq!(filtered.stats.hyperlinks, 1);
    }

    #[test]
    fn filter_threshold_above_everything_empties() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine.neighborhood(PageId(1), 2, None).unwrap();
        let (_dir, store) = store_with_counts(&[(1, 10)]);
        let filtered = engine
            .filter_by_visits(&sub, &store, 1_000_000, hour(0), hour(23))
            .unwrap();
        assert!(filtered.nodes.is_empty());
        assert!(filtered.edges.is_empty());
        assert_eq!(filtered.stats, SubgraphStats::default());
    }

    #[test]
    fn attach_series_gives_every_node_an_entry() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine.neighborhood(PageId(1), 1, None).unwrap();
        let (_dir, store) = store_with_counts(&[(2, 500)]);
        let attached = engine
            .attach_series(&sub, &store, hour(0), hour(23))
            .unwrap();
        let series = attached.series.as_ref().unwrap();
        assert_eq!(series.len(), attached.nodes.len());
        assert_eq!(series[&PageId(2)], vec![(hour(6), 500)]);
        assert!(series[&PageId(1)].is_empty());
    }

    #[test]
    fn filter_then_attach_keys_match_filtered_nodes() {
        let g = fixture();
        let engine = QueryEngine::new(&g);
        let sub = engine
            .category_closure(PageId(100), DepthSpec::Bounded(2))
            .unwrap();
        let (_dir, store) = store_with_counts(&[(2, 500), (4, 300)]);
        let filtered = engine
            .filter_by_visits(&sub, &store, 0, hour(0), hour(23))
            .unwrap();
        let attached = engine
            .attach_series(&filtered, &store, hour(0), hour(23))
            .unwrap();
        let keys: Vec<PageId> = attached.series.unwrap().into_keys().collect();
        let node_ids: Vec<PageId> = attached.nodes.iter().map(|n| n.id).collect();
        assert_eq!(keys, node_ids);
        assert!(!keys.is_empty());
    }
}
