//! Seeded generators and independent oracles for the acceptance suite.
//!
//! Every oracle here recomputes its answer from raw rows or flat edge lists
//! using plain hash maps and per-item walks. None of them share index
//! structures or traversal code with the engine, so agreement between the
//! two sides is evidence rather than tautology.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wikigraph::dump::writer::{
    write_categorylinks_insert, write_page_insert, write_pagelinks_insert, write_redirect_insert,
};
use wikigraph::dump::{CategoryLinkRow, LinkRow, PageRow, RedirectRow};
use wikigraph::graph::GraphSnapshot;
use wikigraph::timeseries::PagecountRecord;
use wikigraph::types::{day_start, Direction, Edge, EdgeKind, Node, NodeKind, PageId, Title};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Synthetic SQL dumps and the chain-chasing redirect oracle
// ---------------------------------------------------------------------------

pub struct SyntheticWiki {
    pub pages: Vec<PageRow>,
    pub redirects: Vec<RedirectRow>,
    pub links: Vec<LinkRow>,
    pub category_links: Vec<CategoryLinkRow>,
    pub redirect_flagged: usize,
}

/// A random wiki with messy-on-purpose structure: redirect chains up to
/// length five, planted redirect cycles, redirects without a redirect row,
/// redirect rows for unflagged pages, links from and to redirects, dangling
/// titles, self-links, duplicates, and cross-kind targets.
pub fn synthetic_wiki(rng: &mut ChaCha8Rng, max_pages: usize) -> SyntheticWiki {
    let n = rng.gen_range(60..=max_pages.max(60));
    let mut ids: Vec<u64> = (1..=(3 * n as u64)).collect();
    ids.shuffle(rng);
    ids.truncate(n);

    let mut pages = Vec::with_capacity(n);
    for (i, &id) in ids.iter().enumerate() {
        // Every fifth page is a category so even tiny samples have some.
        let ns = if i % 5 == 0 { 14 } else { 0 };
        let prefix = if ns == 0 { "Article" } else { "Category" };
        pages.push(PageRow {
            page_id: PageId(id),
            namespace: ns,
            title: Title::new(format!("{prefix}_{i}").into_bytes()),
            is_redirect: false,
        });
    }

    let share = rng.gen_range(0.05..=0.20);
    let flagged = ((n as f64) * share).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let redirect_idx: Vec<usize> = order[..flagged].to_vec();
    for &i in &redirect_idx {
        pages[i].is_redirect = true;
    }

    // One redirect row per flagged page at most; later planting overwrites.
    let mut rows: BTreeMap<u64, (i32, Title)> = BTreeMap::new();
    for &i in &redirect_idx {
        let roll: f64 = rng.gen();
        if roll < 0.75 {
            let t = &pages[rng.gen_range(0..n)];
            rows.insert(pages[i].page_id.0, (t.namespace, t.title.clone()));
        } else if roll < 0.85 {
            rows.insert(pages[i].page_id.0, (0, Title::new(format!("Ghost_{i}").into_bytes())));
        } else if roll < 0.92 {
            // Same title looked up in the other namespace; usually dangling.
            let t = &pages[rng.gen_range(0..n)];
            rows.insert(pages[i].page_id.0, (14 - t.namespace, t.title.clone()));
        }
        // else: flagged page with no redirect row at all.
    }

    // Plant explicit chains of length 3 to 5 ending at a non-redirect page,
    // and one cycle, whenever enough flagged pages exist.
    let mut pool = redirect_idx.clone();
    let terminals: Vec<usize> = (0..n).filter(|i| !pages[*i].is_redirect).collect();
    while pool.len() >= 8 && !terminals.is_empty() {
        let len = rng.gen_range(3..=5.min(pool.len() - 3));
        let chain: Vec<usize> = pool.drain(..len).collect();
        for pair in chain.windows(2) {
            let to = &pages[pair[1]];
            rows.insert(pages[pair[0]].page_id.0, (to.namespace, to.title.clone()));
        }
        let end = &pages[terminals[rng.gen_range(0..terminals.len())]];
        rows.insert(
            pages[*chain.last().expect("nonempty chain")].page_id.0,
            (end.namespace, end.title.clone()),
        );
    }
    if pool.len() >= 3 {
        let cycle: Vec<usize> = pool.drain(..3).collect();
        for k in 0..cycle.len() {
            let to = &pages[cycle[(k + 1) % cycle.len()]];
            rows.insert(pages[cycle[k]].page_id.0, (to.namespace, to.title.clone()));
        }
    }

    let mut redirects: Vec<RedirectRow> = rows
        .into_iter()
        .map(|(source, (ns, title))| RedirectRow {
            source_page_id: PageId(source),
            target_namespace: ns,
            target_title: title,
        })
        .collect();
    // Redirect rows for pages that are not flagged; the pipeline must
    // ignore them (they only bump the flag-violation counter).
    for _ in 0..(n / 50).max(1) {
        let t = &pages[rng.gen_range(0..n)];
        let source = pages[order[flagged + rng.gen_range(0..(n - flagged))]].page_id;
        redirects.push(RedirectRow {
            source_page_id: source,
            target_namespace: t.namespace,
            target_title: t.title.clone(),
        });
    }
    redirects.shuffle(rng);

    let m = rng.gen_range(n..=4 * n);
    let mut links = Vec::with_capacity(m + 8);
    for k in 0..m {
        let source = match rng.gen_range(0u32..100) {
            0..=85 => pages[rng.gen_range(0..n)].page_id,
            86..=92 => PageId(3 * n as u64 + 1 + k as u64), // unknown id
            _ => pages[redirect_idx[rng.gen_range(0..redirect_idx.len())]].page_id,
        };
        let (tns, ttitle) = match rng.gen_range(0u32..100) {
            0..=74 => {
                let t = &pages[rng.gen_range(0..n)];
                (t.namespace, t.title.clone())
            }
            75..=84 => (0, Title::new(format!("Nowhere_{k}").into_bytes())),
            _ => {
                let t = &pages[terminals[rng.gen_range(0..terminals.len())]];
                (t.namespace, t.title.clone())
            }
        };
        links.push(LinkRow { source_page_id: source, target_namespace: tns, target_title: ttitle });
    }
    for _ in 0..4 {
        // Self-link and exact duplicate rows.
        let p = &pages[terminals[rng.gen_range(0..terminals.len())]];
        links.push(LinkRow {
            source_page_id: p.page_id,
            target_namespace: p.namespace,
            target_title: p.title.clone(),
        });
        let dup = links[rng.gen_range(0..links.len())].clone();
        links.push(dup);
    }

    let categories: Vec<usize> = (0..n).filter(|i| pages[*i].namespace == 14).collect();
    let c = rng.gen_range(n / 2..=2 * n);
    let mut category_links = Vec::with_capacity(c);
    for k in 0..c {
        let source = match rng.gen_range(0u32..100) {
            0..=89 => pages[rng.gen_range(0..n)].page_id,
            90..=94 => PageId(3 * n as u64 + 500_000 + k as u64),
            _ => pages[redirect_idx[rng.gen_range(0..redirect_idx.len())]].page_id,
        };
        let title = if rng.gen_bool(0.85) {
            pages[categories[rng.gen_range(0..categories.len())]].title.clone()
        } else {
            Title::new(format!("Nocat_{k}").into_bytes())
        };
        category_links.push(CategoryLinkRow { source_page_id: source, target_category_title: title });
    }

    SyntheticWiki { pages, redirects, links, category_links, redirect_flagged: flagged }
}

/// Renders the wiki as four SQL dump files with realistic surrounding
/// texture (comments, DDL, multiple INSERT statements).
pub fn render_sql(wiki: &SyntheticWiki) -> [Vec<u8>; 4] {
    fn dump<T>(
        table: &str,
        rows: &[T],
        write: impl Fn(&mut Vec<u8>, &[T]) -> std::io::Result<()>,
    ) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"-- MySQL dump 10.16  Distrib 5.5.9\n--\n");
        out.extend_from_slice(format!("DROP TABLE IF EXISTS `{table}`;\n").as_bytes());
        out.extend_from_slice(
            format!("CREATE TABLE `{table}` (\n  `x` int(8) unsigned NOT NULL\n);\n").as_bytes(),
        );
        let mid = rows.len() / 2;
        write(&mut out, &rows[..mid]).expect("vec write");
        write(&mut out, &rows[mid..]).expect("vec write");
        out
    }
    [
        dump("page", &wiki.pages, |w, r| write_page_insert(w, r)),
        dump("redirect", &wiki.redirects, |w, r| write_redirect_insert(w, r)),
        dump("pagelinks", &wiki.links, |w, r| write_pagelinks_insert(w, r)),
        dump("categorylinks", &wiki.category_links, |w, r| write_categorylinks_insert(w, r)),
    ]
}

pub struct ResolvedDump {
    pub edges: BTreeSet<(u64, u64, EdgeKind)>,
    pub node_ids: BTreeSet<u64>,
}

/// Chain-chasing oracle: resolves every link row by walking redirect rows
/// one hop at a time through a (namespace, title) map. No memoization, no
/// shared state with the pipeline.
pub fn oracle_resolve(wiki: &SyntheticWiki, max_hops: u32) -> ResolvedDump {
    let by_title: HashMap<(i32, &[u8]), &PageRow> = wiki
        .pages
        .iter()
        .map(|p| ((p.namespace, p.title.as_bytes()), p))
        .collect();
    let by_id: HashMap<u64, &PageRow> =
        wiki.pages.iter().map(|p| (p.page_id.0, p)).collect();
    // Last row wins per source, and only rows for flagged pages count.
    let mut target: HashMap<u64, (i32, &Title)> = HashMap::new();
    for row in &wiki.redirects {
        if by_id.get(&row.source_page_id.0).is_some_and(|p| p.is_redirect) {
            target.insert(row.source_page_id.0, (row.target_namespace, &row.target_title));
        }
    }

    let chase = |ns: i32, title: &Title| -> Option<&PageRow> {
        let mut cur = *by_title.get(&(ns, title.as_bytes()))?;
        let mut walked: HashSet<u64> = HashSet::new();
        let mut hops = 0u32;
        while cur.is_redirect {
            if !walked.insert(cur.page_id.0) {
                return None; // cycle
            }
            hops += 1;
            if hops > max_hops {
                return None; // too deep
            }
            let (tns, ttitle) = target.get(&cur.page_id.0)?;
            cur = *by_title.get(&(*tns, ttitle.as_bytes()))?;
        }
        Some(cur)
    };

    let kind_of = |p: &PageRow| {
        if p.namespace == 14 { NodeKind::Category } else { NodeKind::Article }
    };
    let mut edges = BTreeSet::new();
    let mut push = |src: PageId, tns: i32, ttitle: &Title, kind: EdgeKind| {
        let Some(srow) = by_id.get(&src.0) else { return };
        if srow.is_redirect {
            return;
        }
        let Some(trow) = chase(tns, ttitle) else { return };
        let valid = match kind {
            EdgeKind::LinksTo => {
                kind_of(srow) == NodeKind::Article && kind_of(trow) == NodeKind::Article
            }
            EdgeKind::BelongsTo => kind_of(trow) == NodeKind::Category,
        };
        if !valid || srow.page_id == trow.page_id {
            return;
        }
        edges.insert((srow.page_id.0, trow.page_id.0, kind));
    };
    for row in &wiki.links {
        push(row.source_page_id, row.target_namespace, &row.target_title, EdgeKind::LinksTo);
    }
    for row in &wiki.category_links {
        push(row.source_page_id, 14, &row.target_category_title, EdgeKind::BelongsTo);
    }

    let node_ids = wiki
        .pages
        .iter()
        .filter(|p| !p.is_redirect)
        .map(|p| p.page_id.0)
        .collect();
    ResolvedDump { edges, node_ids }
}

// ---------------------------------------------------------------------------
// Random graphs
// ---------------------------------------------------------------------------

/// Category hierarchy with planted cycles plus member articles and some
/// article-to-article links. Category ids start at 1, article ids at
/// 1_000_000, so the two ranges never collide.
pub fn random_category_graph(
    rng: &mut ChaCha8Rng,
    max_cats: usize,
    max_articles: usize,
) -> (Vec<Node>, Vec<Edge>) {
    let nc = rng.gen_range(8..=max_cats.max(8));
    let na = rng.gen_range(nc..=max_articles.max(nc));
    let mut nodes = Vec::with_capacity(nc + na);
    for c in 0..nc {
        nodes.push(Node::category(1 + c as u64, &format!("Cat_{c}")));
    }
    for a in 0..na {
        nodes.push(Node::article(1_000_000 + a as u64, &format!("Art_{a}")));
    }

    let mut edges: HashSet<Edge> = HashSet::new();
    // Each category except the first points up to 1-3 earlier categories,
    // guaranteeing reachability structure; extra random edges (including
    // back-edges) plant cycles.
    for c in 1..nc {
        for _ in 0..rng.gen_range(1..=3) {
            let parent = rng.gen_range(0..c);
            edges.insert(Edge::belongs_to(1 + c as u64, 1 + parent as u64));
        }
    }
    for _ in 0..nc / 3 {
        let a = rng.gen_range(0..nc);
        let b = rng.gen_range(0..nc);
        if a != b {
            edges.insert(Edge::belongs_to(1 + a as u64, 1 + b as u64));
        }
    }
    for a in 0..na {
        for _ in 0..rng.gen_range(0..=3) {
            let c = rng.gen_range(0..nc);
            edges.insert(Edge::belongs_to(1_000_000 + a as u64, 1 + c as u64));
        }
    }
    for _ in 0..na {
        let s = rng.gen_range(0..na);
        let t = rng.gen_range(0..na);
        if s != t {
            edges.insert(Edge::links_to(1_000_000 + s as u64, 1_000_000 + t as u64));
        }
    }
    (nodes, edges.into_iter().collect())
}

/// Article-only graph whose in-degree distribution is heavy-tailed: targets
/// are sampled with probability proportional to 1/(rank+1)^0.9.
pub fn power_law_graph(rng: &mut ChaCha8Rng, n: usize, avg_out: usize) -> (Vec<Node>, Vec<Edge>) {
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node::article(1 + i as u64, &format!("Art_{i}")))
        .collect();
    let mut cum = Vec::with_capacity(n);
    let mut total = 0.0f64;
    for i in 0..n {
        total += 1.0 / ((i + 1) as f64).powf(0.9);
        cum.push(total);
    }
    let mut edges: HashSet<Edge> = HashSet::with_capacity(n * avg_out);
    for _ in 0..n * avg_out {
        let s = rng.gen_range(0..n) as u64 + 1;
        let x: f64 = rng.gen_range(0.0..total);
        let t = cum.partition_point(|&c| c < x) as u64 + 1;
        if s != t && t <= n as u64 {
            edges.insert(Edge::links_to(s, t));
        }
    }
    (nodes, edges.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Traversal oracles
// ---------------------------------------------------------------------------

/// Path-length oracle for the category closure: hop-by-hop reverse walk of
/// `belongs_to` over a hash-map adjacency, then one article sweep.
pub fn oracle_closure(
    nodes: &[Node],
    edges: &[Edge],
    root: PageId,
    depth: Option<u32>,
) -> BTreeSet<PageId> {
    let kind: HashMap<PageId, NodeKind> = nodes.iter().map(|n| (n.id, n.kind)).collect();
    let mut children: HashMap<PageId, Vec<PageId>> = HashMap::new();
    for e in edges.iter().filter(|e| e.kind == EdgeKind::BelongsTo) {
        children.entry(e.target).or_default().push(e.source);
    }
    let mut cats: BTreeSet<PageId> = BTreeSet::new();
    cats.insert(root);
    let mut frontier = vec![root];
    let mut hop = 0u32;
    while !frontier.is_empty() && depth.map_or(true, |d| hop < d) {
        hop += 1;
        let mut next = Vec::new();
        for c in frontier {
            for &ch in children.get(&c).into_iter().flatten() {
                if kind[&ch] == NodeKind::Category && cats.insert(ch) {
                    next.push(ch);
                }
            }
        }
        frontier = next;
    }
    let mut out = cats.clone();
    for c in &cats {
        for &ch in children.get(c).into_iter().flatten() {
            if kind[&ch] == NodeKind::Article {
                out.insert(ch);
            }
        }
    }
    out
}

/// Reference capped BFS over `links_to` out-edges: a frontier node other
/// than the root whose out-degree exceeds the cap is kept but not expanded.
pub fn oracle_neighborhood(
    edges: &[Edge],
    root: PageId,
    depth: u32,
    cap: Option<u64>,
) -> BTreeSet<PageId> {
    let mut adj: HashMap<PageId, BTreeSet<PageId>> = HashMap::new();
    for e in edges.iter().filter(|e| e.kind == EdgeKind::LinksTo) {
        adj.entry(e.source).or_default().insert(e.target);
    }
    let mut seen: BTreeSet<PageId> = BTreeSet::new();
    seen.insert(root);
    let mut frontier = vec![root];
    for hop in 1..=depth {
        let mut next = Vec::new();
        for u in frontier {
            let out = adj.get(&u);
            let deg = out.map_or(0, |s| s.len() as u64);
            if hop > 1 && cap.is_some_and(|c| deg > c) {
                continue;
            }
            for &v in out.into_iter().flatten() {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Full-edge-scan induced subgraph: O(|E|) regardless of the member count.
pub fn oracle_induced(
    all_edges: impl Iterator<Item = Edge>,
    members: &HashSet<PageId>,
) -> Vec<Edge> {
    let mut out: Vec<Edge> = all_edges
        .filter(|e| members.contains(&e.source) && members.contains(&e.target))
        .collect();
    out.sort_unstable();
    out
}

// ---------------------------------------------------------------------------
// Counts fixtures and the summation oracle
// ---------------------------------------------------------------------------

pub struct CountsFixture {
    pub days: Vec<(NaiveDate, Vec<PagecountRecord>)>,
}

/// Random hourly counts for pages `base_id..base_id + n_pages`: per day each
/// page is active with probability 0.6 and gets 1-8 distinct nonzero hours;
/// a tenth of the pages run ten times hotter so daily totals straddle any
/// realistic threshold.
pub fn random_counts(
    rng: &mut ChaCha8Rng,
    base_id: u64,
    n_pages: usize,
    n_days: usize,
    start: NaiveDate,
) -> CountsFixture {
    let mut days = Vec::with_capacity(n_days);
    for d in 0..n_days {
        let day = start + Duration::days(d as i64);
        let base = day_start(day);
        let mut records = Vec::new();
        for p in base_id..base_id + n_pages as u64 {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let hot = p % 10 == 0;
            let mut hours: Vec<i64> = (0..24).collect();
            hours.shuffle(rng);
            for &h in hours.iter().take(rng.gen_range(1..=8)) {
                let count = if hot { rng.gen_range(10..=600) } else { rng.gen_range(1..=60) };
                records.push(PagecountRecord {
                    page_id: PageId(p),
                    hour: base + Duration::hours(h),
                    count,
                });
            }
        }
        records.shuffle(rng);
        days.push((day, records));
    }
    CountsFixture { days }
}

/// What the store should hold after thresholded ingestion: per-day keep rule
/// applied by brute-force daily summation, keyed (page, epoch hour).
pub fn oracle_kept(fixture: &CountsFixture, threshold: u64) -> BTreeMap<(u64, i64), u32> {
    let mut kept = BTreeMap::new();
    for (_, records) in &fixture.days {
        let mut totals: HashMap<u64, u64> = HashMap::new();
        for r in records {
            *totals.entry(r.page_id.0).or_insert(0) += r.count as u64;
        }
        for r in records {
            if totals[&r.page_id.0] >= threshold && r.count > 0 {
                *kept.entry((r.page_id.0, r.hour.timestamp())).or_insert(0) += r.count;
            }
        }
    }
    kept
}

pub fn oracle_range(
    kept: &BTreeMap<(u64, i64), u32>,
    page: u64,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Vec<(i64, u32)> {
    kept.range((page, start.timestamp())..(page, end.timestamp()))
        .map(|(&(_, hour), &count)| (hour, count))
        .collect()
}

pub fn oracle_pages_above(
    kept: &BTreeMap<(u64, i64), u32>,
    total_threshold: u64,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Vec<PageId> {
    let (lo, hi) = (start.timestamp(), end.timestamp());
    let mut sums: BTreeMap<u64, u64> = BTreeMap::new();
    for (&(page, hour), &count) in kept {
        if hour >= lo && hour < hi {
            *sums.entry(page).or_insert(0) += count as u64;
        }
    }
    sums.into_iter()
        .filter(|&(_, sum)| sum > total_threshold)
        .map(|(page, _)| PageId(page))
        .collect()
}

// ---------------------------------------------------------------------------
// Snapshot perturbation and observational equality
// ---------------------------------------------------------------------------

/// A plausibly-drifted successor: some nodes removed (with their edges),
/// some titles renamed, some nodes added, some edges rewired.
pub fn perturb_graph(
    rng: &mut ChaCha8Rng,
    nodes: &[Node],
    edges: &[Edge],
) -> (Vec<Node>, Vec<Edge>) {
    let mut new_nodes: Vec<Node> = nodes.to_vec();
    new_nodes.shuffle(rng);
    let drop = new_nodes.len() / 20;
    let dropped: HashSet<PageId> = new_nodes.drain(..drop).map(|n| n.id).collect();

    for node in new_nodes.iter_mut() {
        if rng.gen_bool(0.03) {
            node.title = Title::new(format!("Renamed_{}", node.id).into_bytes());
        }
    }

    let max_id = nodes.iter().map(|n| n.id.0).max().unwrap_or(0);
    let added: Vec<Node> = (0..nodes.len() / 20)
        .map(|k| {
            let id = max_id + 1 + k as u64;
            if rng.gen_bool(0.3) {
                Node::category(id, &format!("Addedcat_{id}"))
            } else {
                Node::article(id, &format!("Added_{id}"))
            }
        })
        .collect();
    new_nodes.extend(added.iter().cloned());

    let mut new_edges: Vec<Edge> = edges
        .iter()
        .filter(|e| !dropped.contains(&e.source) && !dropped.contains(&e.target))
        .filter(|_| rng.gen_bool(0.97))
        .copied()
        .collect();
    // Wire every added node somewhere so additions are observable.
    let articles: Vec<PageId> = new_nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Article)
        .map(|n| n.id)
        .collect();
    let categories: Vec<PageId> = new_nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Category)
        .map(|n| n.id)
        .collect();
    let mut seen: HashSet<Edge> = new_edges.iter().copied().collect();
    for node in &added {
        match node.kind {
            NodeKind::Article => {
                let t = articles[rng.gen_range(0..articles.len())];
                if t != node.id {
                    let e = Edge::links_to(node.id.0, t.0);
                    if seen.insert(e) {
                        new_edges.push(e);
                    }
                }
            }
            NodeKind::Category => {
                if let Some(&t) = categories.iter().find(|&&c| c != node.id) {
                    let e = Edge::belongs_to(node.id.0, t.0);
                    if seen.insert(e) {
                        new_edges.push(e);
                    }
                }
            }
        }
    }
    (new_nodes, new_edges)
}

/// Observational digest: lookups and typed neighbor lists for a fixed id
/// sample, rendered as strings so two snapshots can be compared verbatim.
pub fn query_digest(graph: &GraphSnapshot, ids: &[PageId]) -> Vec<String> {
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let mut line = match graph.lookup_id(id) {
            Some(node) => format!("{id}: {} {}", node.kind, node.title),
            None => {
                out.push(format!("{id}: absent"));
                continue;
            }
        };
        for (kind, dir, tag) in [
            (EdgeKind::LinksTo, Direction::Out, "lo"),
            (EdgeKind::LinksTo, Direction::In, "li"),
            (EdgeKind::BelongsTo, Direction::Out, "bo"),
            (EdgeKind::BelongsTo, Direction::In, "bi"),
        ] {
            let ns = graph.neighbors(id, kind, dir).expect("id present");
            line.push_str(&format!(" {tag}={ns:?}"));
        }
        out.push(line);
    }
    out
}

pub fn sample_ids(rng: &mut ChaCha8Rng, pools: &[&[Node]], k: usize) -> Vec<PageId> {
    let mut all: Vec<PageId> = pools.iter().flat_map(|p| p.iter().map(|n| n.id)).collect();
    all.sort_unstable();
    all.dedup();
    (0..k).map(|_| all[rng.gen_range(0..all.len())]).collect()
}
