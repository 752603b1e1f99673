//! Redirect chain resolution and link endpoint rewriting.
//!
//! Redirect pages never become graph nodes. Every link that pointed at one
//! is rewritten to the chain's terminal page; links that originate at a
//! redirect are discarded with it, as are memberships of redirect pages.
//! Chains are resolved transitively with a hop bound, and every page the
//! resolver gives up on lands in a dropped set with a reason code.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::dump::{CategoryLinkRow, LinkRow, PageRow};
use crate::types::{Edge, EdgeKind, Node, NodeKind, PageId, Title, NS_CATEGORY};

/// Default bound on redirect chain length, counted in redirect hops from the
/// starting page to the terminal page.
pub const DEFAULT_MAX_HOPS: u32 = 16;

/// Why a redirect page could not be resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// The chain revisits a page (or feeds into a cycle).
    Cycle,
    /// The chain reaches a target title that no page has (or a flagged
    /// redirect has no redirect row).
    Dangling,
    /// The chain terminates, but past the hop bound.
    TooDeep,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::Cycle => "cycle",
            DropReason::Dangling => "dangling",
            DropReason::TooDeep => "too_deep",
        }
    }
}

/// Title and flag lookups over one dump's page set.
pub struct PageIndex {
    titles: [HashMap<Title, PageId>; 2],
    entries: HashMap<PageId, PageMeta>,
}

#[derive(Clone, Copy)]
struct PageMeta {
    kind: NodeKind,
    is_redirect: bool,
}

fn ns_slot(ns: i32) -> Option<usize> {
    match NodeKind::from_namespace(ns)? {
        NodeKind::Article => Some(0),
        NodeKind::Category => Some(1),
    }
}

impl PageIndex {
    /// Indexes pages by id and by (namespace, title). Pages outside the
    /// article/category namespaces are ignored; the parser never emits them.
    pub fn build(pages: &[PageRow]) -> Self {
        let mut titles = [HashMap::new(), HashMap::new()];
        let mut entries = HashMap::with_capacity(pages.len());
        for page in pages {
            let Some(kind) = NodeKind::from_namespace(page.namespace) else {
                continue;
            };
            let slot = ns_slot(page.namespace).expect("kind implies slot");
            titles[slot].insert(page.title.clone(), page.page_id);
            entries.insert(
                page.page_id,
                PageMeta { kind, is_redirect: page.is_redirect },
            );
        }
        PageIndex { titles, entries }
    }

    pub fn lookup(&self, namespace: i32, title: &Title) -> Option<PageId> {
        self.titles[ns_slot(namespace)?].get(title).copied()
    }

    pub fn contains(&self, id: PageId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn kind(&self, id: PageId) -> Option<NodeKind> {
        self.entries.get(&id).map(|m| m.kind)
    }

    pub fn is_redirect(&self, id: PageId) -> bool {
        self.entries.get(&id).is_some_and(|m| m.is_redirect)
    }

    fn redirect_ids(&self) -> impl Iterator<Item = PageId> + '_ {
        self.entries
            .iter()
            .filter(|(_, m)| m.is_redirect)
            .map(|(id, _)| *id)
    }
}

/// Result of resolving every redirect page: either a terminal target or a
/// drop reason. Domains of the two sides are disjoint and together cover
/// exactly the redirect-flagged pages.
pub struct RedirectMap {
    map: HashMap<PageId, PageId>,
    dropped: HashMap<PageId, DropReason>,
    /// Redirect rows whose source page is missing or not flagged as a
    /// redirect. Reported, not fatal; such rows are ignored.
    pub flag_violations: u64,
}

impl RedirectMap {
    /// Terminal page for a resolvable redirect, None otherwise.
    pub fn target_of(&self, id: PageId) -> Option<PageId> {
        self.map.get(&id).copied()
    }

    pub fn drop_reason(&self, id: PageId) -> Option<DropReason> {
        self.dropped.get(&id).copied()
    }

    pub fn resolved_len(&self) -> usize {
        self.map.len()
    }

    pub fn dropped_len(&self) -> usize {
        self.dropped.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PageId, PageId)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }
}

#[derive(Clone, Copy)]
enum Resolution {
    Target { id: PageId, hops: u32 },
    Dropped(DropReason),
}

/// Resolves every redirect-flagged page to its terminal non-redirect page.
///
/// Resolution is fully transitive and memoized, so each page is walked once
/// regardless of how many chains share a suffix. Chains longer than
/// `max_hops` are dropped as too deep; cycles and unresolvable targets are
/// dropped with their own reasons, and pages whose chains feed into a
/// dropped page inherit its reason.
pub fn build_redirect_map(
    index: &PageIndex,
    redirects: &[crate::dump::RedirectRow],
    max_hops: u32,
) -> RedirectMap {
    let mut flag_violations = 0u64;
    let mut targets: HashMap<PageId, (i32, &Title)> = HashMap::with_capacity(redirects.len());
    for row in redirects {
        if !index.is_redirect(row.source_page_id) {
            flag_violations += 1;
            continue;
        }
        targets.insert(row.source_page_id, (row.target_namespace, &row.target_title));
    }

    let mut memo: HashMap<PageId, Resolution> = HashMap::new();
    for start in index.redirect_ids() {
        if memo.contains_key(&start) {
            continue;
        }
        resolve_chain(start, index, &targets, max_hops, &mut memo);
    }

    let mut map = HashMap::new();
    let mut dropped = HashMap::new();
    for (id, res) in memo {
        match res {
            Resolution::Target { id: target, .. } => {
                map.insert(id, target);
            }
            Resolution::Dropped(reason) => {
                dropped.insert(id, reason);
            }
        }
    }
    RedirectMap { map, dropped, flag_violations }
}

fn resolve_chain(
    start: PageId,
    index: &PageIndex,
    targets: &HashMap<PageId, (i32, &Title)>,
    max_hops: u32,
    memo: &mut HashMap<PageId, Resolution>,
) {
    let mut path: Vec<PageId> = Vec::new();
    let mut cur = start;
    // walk to a terminal, a memoized page, a cycle, or a dead end
    let tail: Resolution = loop {
        if let Some(res) = memo.get(&cur) {
            break *res;
        }
        if !index.is_redirect(cur) {
            break Resolution::Target { id: cur, hops: 0 };
        }
        if let Some(pos) = path.iter().position(|&p| p == cur) {
            // everything from the first revisited page on is the cycle;
            // the prefix feeds into it and is equally unresolvable
            for &id in &path[pos..] {
                memo.insert(id, Resolution::Dropped(DropReason::Cycle));
            }
            path.truncate(pos);
            break Resolution::Dropped(DropReason::Cycle);
        }
        path.push(cur);
        let next = targets
            .get(&cur)
            .and_then(|(ns, title)| index.lookup(*ns, title));
        match next {
            Some(id) => cur = id,
            None => {
                memo.insert(path.pop().expect("just pushed"), Resolution::Dropped(DropReason::Dangling));
                break Resolution::Dropped(DropReason::Dangling);
            }
        }
    };
    // unwind: pages closer to the start are one hop deeper each
    let mut res = tail;
    for &id in path.iter().rev() {
        res = match res {
            Resolution::Target { id: target, hops } if hops + 1 <= max_hops => {
                Resolution::Target { id: target, hops: hops + 1 }
            }
            Resolution::Target { .. } => Resolution::Dropped(DropReason::TooDeep),
            Resolution::Dropped(reason) => Resolution::Dropped(reason),
        };
        memo.insert(id, res);
    }
}

/// Where discarded rows went during link resolution. `dangling`, `cycle` and
/// `too_deep` count edges whose endpoint resolution failed for that reason;
/// the remaining counters cover rows dropped by policy rather than failure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DiscardReport {
    pub dangling: u64,
    pub cycle: u64,
    pub too_deep: u64,
    pub self_loops_removed: u64,
    pub duplicates_collapsed: u64,
    pub from_redirect: u64,
    pub kind_mismatch: u64,
}

impl DiscardReport {
    pub fn total_discarded(&self) -> u64 {
        self.dangling
            + self.cycle
            + self.too_deep
            + self.self_loops_removed
            + self.duplicates_collapsed
            + self.from_redirect
            + self.kind_mismatch
    }
}

enum EndpointError {
    Dangling,
    Dropped(DropReason),
}

/// Maps a raw (namespace, title) endpoint to its final page id, chasing the
/// redirect map when the title belongs to a redirect page.
fn resolve_endpoint(
    namespace: i32,
    title: &Title,
    index: &PageIndex,
    map: &RedirectMap,
) -> Result<PageId, EndpointError> {
    let id = index
        .lookup(namespace, title)
        .ok_or(EndpointError::Dangling)?;
    if !index.is_redirect(id) {
        return Ok(id);
    }
    match map.target_of(id) {
        Some(target) => Ok(target),
        None => Err(EndpointError::Dropped(
            map.drop_reason(id).expect("redirect is mapped or dropped"),
        )),
    }
}

/// Rewrites raw link and membership rows into id-pair edges with redirects
/// resolved away. Kept edges preserve input order; duplicates keep the first
/// occurrence. The rules, in order: rows from redirect or unknown sources are
/// dropped; unresolvable targets are dropped with the resolution's reason;
/// edges whose endpoint kinds do not fit their edge kind are dropped;
/// self-loops and repeat (source, target, kind) triples are dropped.
pub fn resolve_links(
    links: &[LinkRow],
    category_links: &[CategoryLinkRow],
    index: &PageIndex,
    map: &RedirectMap,
) -> (Vec<Edge>, DiscardReport) {
    let mut report = DiscardReport::default();
    let mut edges = Vec::new();
    let mut seen: HashSet<(PageId, PageId, EdgeKind)> = HashSet::new();

    let push = |source: PageId,
                    target_ns: i32,
                    target_title: &Title,
                    kind: EdgeKind,
                    report: &mut DiscardReport,
                    edges: &mut Vec<Edge>,
                    seen: &mut HashSet<(PageId, PageId, EdgeKind)>| {
        if !index.contains(source) {
            report.dangling += 1;
            return;
        }
        if index.is_redirect(source) {
            report.from_redirect += 1;
            return;
        }
        let target = match resolve_endpoint(target_ns, target_title, index, map) {
            Ok(id) => id,
            Err(EndpointError::Dangling) => {
                report.dangling += 1;
                return;
            }
            Err(EndpointError::Dropped(reason)) => {
                match reason {
                    DropReason::Cycle => report.cycle += 1,
                    DropReason::Dangling => report.dangling += 1,
                    DropReason::TooDeep => report.too_deep += 1,
                }
                return;
            }
        };
        let source_kind = index.kind(source).expect("contains checked");
        let target_kind = index.kind(target).expect("index covers map values");
        if !kind.endpoints_valid(source_kind, target_kind) {
            report.kind_mismatch += 1;
            return;
        }
        if source == target {
            report.self_loops_removed += 1;
            return;
        }
        if !seen.insert((source, target, kind)) {
            report.duplicates_collapsed += 1;
            return;
        }
        edges.push(Edge { source, target, kind });
    };

    for row in links {
        push(
            row.source_page_id,
            row.target_namespace,
            &row.target_title,
            EdgeKind::LinksTo,
            &mut report,
            &mut edges,
            &mut seen,
        );
    }
    for row in category_links {
        push(
            row.source_page_id,
            NS_CATEGORY,
            &row.target_category_title,
            EdgeKind::BelongsTo,
            &mut report,
            &mut edges,
            &mut seen,
        );
    }
    (edges, report)
}

/// The node set that survives redirect removal: every non-redirect page,
/// typed by namespace. `|pages| - |redirect-flagged pages|` nodes exactly.
pub fn retained_nodes(pages: &[PageRow]) -> Vec<Node> {
    pages
        .iter()
        .filter(|p| !p.is_redirect)
        .filter_map(|p| {
            let kind = NodeKind::from_namespace(p.namespace)?;
            Some(Node { id: p.page_id, title: p.title.clone(), kind })
        })
        .collect()
}
