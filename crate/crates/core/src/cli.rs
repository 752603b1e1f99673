//! Command-line front door. One verb per pipeline stage: `ingest-graph`,
//! `ingest-counts`, `query`, `update`, `freeze`, `stats`.
//!
//! Conventions: data output (exports, JSON reports) goes to stdout or the
//! `--out` path; diagnostics go to stderr; the exit code is 0 only when the
//! command fully succeeded. When a query exports to stdout, its stats line
//! moves to stderr so the two streams never interleave. Gzip-compressed
//! inputs are recognized by their `.gz` extension.

use std::collections::BTreeMap;
use std::ffi::OsStr;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::bufread::GzDecoder;
use serde_json::json;
use thiserror::Error;

use crate::dump::{
    hour_from_filename, parse_pagecounts, parse_sql_table, CategoryLinkRow, DumpError,
    FromSqlTuple, LinkRow, PageRow, ParseSummary, RawCount, RedirectRow,
};
use crate::graph::{
    build_graph, load_snapshot, save_snapshot, GraphError, GraphSnapshot, SnapshotFileError,
};
use crate::query::{
    export, DepthSpec, ExportError, ExportFormat, QueryEngine, QueryError, Subgraph,
};
use crate::redirect::{
    build_redirect_map, resolve_links, retained_nodes, PageIndex, DEFAULT_MAX_HOPS,
};
use crate::timeseries::{
    resolve_titles, store_exists, DailyThresholdPolicy, TimeseriesStore, TsError,
};
use crate::types::{day_of, is_hour_aligned, NodeKind, Title};
use crate::update::{apply_delta, diff_graphs, FreezeRegistry, UpdateError};

#[derive(Parser)]
#[command(
    name = "wikigraph",
    version,
    about = "Typed wiki graph store with hourly viewership series"
)]
pub struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Directory holding the snapshot, time-series store and freeze registry.
    #[arg(long, global = true, env = "WIKIGRAPH_DATA_DIR", value_name = "DIR")]
    data_dir: Option<PathBuf>,

    /// Pagecounts project selector.
    #[arg(long, global = true, env = "WIKIGRAPH_PROJECT", default_value = "en")]
    project: String,

    /// Minimum daily visits for a page's hours to be stored.
    #[arg(
        long,
        global = true,
        env = "WIKIGRAPH_DAILY_THRESHOLD",
        default_value_t = 100
    )]
    daily_threshold: u64,

    /// Node-count ceiling for a single query traversal.
    #[arg(
        long,
        global = true,
        env = "WIKIGRAPH_QUERY_NODE_CEILING",
        default_value_t = 1_000_000
    )]
    query_node_ceiling: usize,

    /// Treat malformed dump tuples and pagecount lines as fatal.
    #[arg(long, global = true, env = "WIKIGRAPH_STRICT_PARSE")]
    strict_parse: bool,
}

/// Resolved configuration; `data_dir` is mandatory once a command runs.
struct Config {
    data_dir: PathBuf,
    project: String,
    daily_threshold: u64,
    query_node_ceiling: usize,
    strict_parse: bool,
}

impl Config {
    fn resolve(args: &ConfigArgs) -> Result<Config, CliError> {
        let data_dir = args.data_dir.clone().ok_or_else(|| {
            CliError::Usage("--data-dir (or WIKIGRAPH_DATA_DIR) is required".to_string())
        })?;
        Ok(Config {
            data_dir,
            project: args.project.clone(),
            daily_threshold: args.daily_threshold,
            query_node_ceiling: args.query_node_ceiling,
            strict_parse: args.strict_parse,
        })
    }

    fn graph_path(&self) -> PathBuf {
        self.data_dir.join("graph.snap")
    }

    fn ts_dir(&self) -> PathBuf {
        self.data_dir.join("timeseries")
    }

    fn registry_dir(&self) -> PathBuf {
        self.data_dir.join("registry")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse SQL dumps, resolve redirects, build and save a graph snapshot.
    IngestGraph(IngestGraphArgs),
    /// Ingest hourly pagecounts files into the time-series store.
    IngestCounts(IngestCountsArgs),
    /// Extract a subgraph, optionally filter by visits, and export it.
    Query(QueryArgs),
    /// Diff a new snapshot against the current one and apply the delta.
    Update(UpdateArgs),
    /// Freeze the current graph and time-series manifest under a label.
    Freeze(FreezeArgs),
    /// Report stored graph and time-series totals as JSON.
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestGraphArgs {
    /// page.sql dump (optionally .gz).
    page: PathBuf,
    /// redirect.sql dump.
    redirect: PathBuf,
    /// pagelinks.sql dump.
    pagelinks: PathBuf,
    /// categorylinks.sql dump.
    categorylinks: PathBuf,
    /// Fail on the first malformed tuple instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Label recorded in the snapshot id.
    #[arg(long, default_value = "ingest")]
    label: String,
    /// Write the snapshot here instead of <data-dir>/graph.snap.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestCountsArgs {
    /// pagecounts-YYYYMMDD-HHMMSS files (optionally .gz).
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QueryKindArg {
    /// Category closure: subcategories within depth plus their articles.
    Category,
    /// Article neighborhood over links_to.
    Neighborhood,
}

#[derive(Args)]
struct QueryArgs {
    kind: QueryKindArg,
    /// Root page title (underscores for spaces, byte-exact).
    root: String,
    /// Hop bound; `unlimited` is accepted for category queries.
    #[arg(long, default_value = "1")]
    depth: String,
    /// Skip expanding non-root nodes with more outgoing links than this.
    #[arg(long, value_name = "N")]
    max_out_degree: Option<u64>,
    /// Drop nodes with at most this many visits in [--from, --to).
    #[arg(long, value_name = "N")]
    visits_threshold: Option<u64>,
    /// Range start hour (inclusive), e.g. 2018-08-01T00:00:00Z or 2018-08-01.
    #[arg(long)]
    from: Option<String>,
    /// Range end hour (exclusive).
    #[arg(long)]
    to: Option<String>,
    /// Export format: csv, json, or graphml.
    #[arg(long, default_value = "json")]
    format: String,
    /// Export to this file; without it the export goes to stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Query a frozen snapshot instead of the live one.
    #[arg(long, value_name = "LABEL")]
    frozen: Option<String>,
}

#[derive(Args)]
struct UpdateArgs {
    /// Snapshot file to move the current graph to.
    new_snapshot: PathBuf,
    /// Write the full delta as JSON to this file.
    #[arg(long, value_name = "FILE")]
    audit: Option<PathBuf>,
    /// Label for the updated snapshot (default: the new snapshot's label).
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct FreezeArgs {
    /// Monthly label, `YYYY-MM`.
    #[arg(long)]
    label: String,
}

#[derive(Args)]
struct StatsArgs {
    /// Report on a frozen snapshot instead of the live one.
    #[arg(long, value_name = "LABEL")]
    frozen: Option<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: DumpError,
    },
    #[error("{0}")]
    Message(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotFileError),
    #[error(transparent)]
    Ts(#[from] TsError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Parses argv and runs one command. Usage problems exit 2, everything
/// else that fails exits 1.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wikigraph: {err}");
            match err {
                CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = Config::resolve(&cli.config)?;
    match &cli.command {
        Command::IngestGraph(args) => cmd_ingest_graph(&config, args),
        Command::IngestCounts(args) => cmd_ingest_counts(&config, args),
        Command::Query(args) => cmd_query(&config, args),
        Command::Update(args) => cmd_update(&config, args),
        Command::Freeze(args) => cmd_freeze(&config, args),
        Command::Stats(args) => cmd_stats(&config, args),
    }
}

/// Opens a file, transparently gunzipping by extension.
fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    let file = File::open(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    if path.extension() == Some(OsStr::new("gz")) {
        Ok(Box::new(BufReader::new(GzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

fn read_sql_table<T: FromSqlTuple>(
    path: &Path,
    strict: bool,
) -> Result<(Vec<T>, ParseSummary), CliError> {
    let reader = open_input(path)?;
    let mut parser = parse_sql_table::<_, T>(reader).strict(strict);
    let mut rows = Vec::new();
    for row in &mut parser {
        rows.push(row.map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?);
    }
    let summary = *parser.summary();
    Ok((rows, summary))
}

fn load_graph(config: &Config) -> Result<GraphSnapshot, CliError> {
    let path = config.graph_path();
    if !path.is_file() {
        return Err(CliError::Message(format!(
            "no graph snapshot at {}; run `wikigraph ingest-graph` first",
            path.display()
        )));
    }
    Ok(load_snapshot(&path)?)
}

fn cmd_ingest_graph(config: &Config, args: &IngestGraphArgs) -> Result<(), CliError> {
    let strict = args.strict || config.strict_parse;
    let started = Instant::now();

    let (pages, page_summary) = read_sql_table::<PageRow>(&args.page, strict)?;
    let (redirects, redirect_summary) = read_sql_table::<RedirectRow>(&args.redirect, strict)?;
    let (links, link_summary) = read_sql_table::<LinkRow>(&args.pagelinks, strict)?;
    let (cat_links, cat_summary) = read_sql_table::<CategoryLinkRow>(&args.categorylinks, strict)?;

    let index = PageIndex::build(&pages);
    let map = build_redirect_map(&index, &redirects, DEFAULT_MAX_HOPS);
    let (edges, discards) = resolve_links(&links, &cat_links, &index, &map);
    let nodes = retained_nodes(&pages);
    let graph = build_graph(nodes, &edges, &args.label)?;

    fs::create_dir_all(&config.data_dir)?;
    let out = args.out.clone().unwrap_or_else(|| config.graph_path());
    save_snapshot(&graph, &out)?;

    let report = json!({
        "snapshot": graph.id(),
        "path": out,
        "counts": graph.counts(),
        "redirects": {
            "resolved": map.resolved_len(),
            "dropped": map.dropped_len(),
            "flag_violations": map.flag_violations,
        },
        "discards": discards,
        "parse": {
            "page": page_summary,
            "redirect": redirect_summary,
            "pagelinks": link_summary,
            "categorylinks": cat_summary,
        },
        "elapsed_ms": started.elapsed().as_millis() as u64,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_ingest_counts(config: &Config, args: &IngestCountsArgs) -> Result<(), CliError> {
    let graph = load_graph(config)?;

    // validate every file name before touching the store, so a bad batch
    // fails without partial ingestion
    let mut by_day: BTreeMap<NaiveDate, Vec<(PathBuf, DateTime<Utc>)>> = BTreeMap::new();
    for path in &args.files {
        let name = path
            .file_name()
            .and_then(OsStr::to_str)
            .unwrap_or_default();
        let hour = hour_from_filename(name).ok_or_else(|| {
            CliError::Usage(format!(
                "{}: file name does not match pagecounts-YYYYMMDD-HHMMSS",
                path.display()
            ))
        })?;
        by_day.entry(day_of(hour)).or_default().push((path.clone(), hour));
    }

    let mut store = TimeseriesStore::open(config.ts_dir())?;
    let policy = DailyThresholdPolicy { threshold: config.daily_threshold };
    let started = Instant::now();
    let mut day_reports = serde_json::Map::new();
    for (day, files) in &by_day {
        let mut raw: Vec<RawCount> = Vec::new();
        for (path, hour) in files {
            let reader = open_input(path)?;
            let mut parser = parse_pagecounts(reader, *hour, config.project.as_bytes())
                .map_err(|source| CliError::Parse { path: path.clone(), source })?
                .strict(config.strict_parse);
            for record in &mut parser {
                raw.push(record.map_err(|source| CliError::Parse {
                    path: path.clone(),
                    source,
                })?);
            }
        }
        let (records, unresolved) = resolve_titles(&raw, &graph);
        let summary = store.ingest_day(*day, &records, policy, unresolved)?;
        day_reports.insert(day.to_string(), serde_json::to_value(summary)?);
    }

    let report = json!({
        "files": args.files.len(),
        "days": day_reports,
        "daily_threshold": config.daily_threshold,
        "project": config.project,
        "elapsed_ms": started.elapsed().as_millis() as u64,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn parse_depth(text: &str) -> Result<DepthSpec, CliError> {
    if text == "unlimited" {
        return Ok(DepthSpec::Unlimited);
    }
    text.parse::<u32>()
        .map(DepthSpec::Bounded)
        .map_err(|_| CliError::Usage(format!("--depth must be an integer or `unlimited`, got `{text}`")))
}

/// Accepts RFC 3339, `YYYY-MM-DDTHH:MM:SS` (UTC assumed), or a bare date
/// (midnight). The result must sit on an hour boundary.
fn parse_hour(text: &str) -> Result<DateTime<Utc>, CliError> {
    let parsed = DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc))
        .or_else(|_| {
            NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S")
                .map(|t| Utc.from_utc_datetime(&t))
        })
        .or_else(|_| {
            NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .map(|d| Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")))
        })
        .map_err(|_| CliError::Usage(format!("cannot parse `{text}` as an hour timestamp")))?;
    if !is_hour_aligned(parsed) {
        return Err(CliError::Usage(format!("`{text}` is not on an hour boundary")));
    }
    Ok(parsed)
}

fn parse_range(
    from: &Option<String>,
    to: &Option<String>,
) -> Result<Option<(DateTime<Utc>, DateTime<Utc>)>, CliError> {
    match (from, to) {
        (None, None) => Ok(None),
        (Some(f), Some(t)) => Ok(Some((parse_hour(f)?, parse_hour(t)?))),
        _ => Err(CliError::Usage(
            "--from and --to must be given together".to_string(),
        )),
    }
}

fn lookup_root(
    graph: &GraphSnapshot,
    kind: NodeKind,
    root: &str,
) -> Result<crate::types::PageId, CliError> {
    let title = Title::from(root);
    if let Some(node) = graph.lookup_title(kind, &title) {
        return Ok(node.id);
    }
    let other = match kind {
        NodeKind::Article => NodeKind::Category,
        NodeKind::Category => NodeKind::Article,
    };
    Err(match graph.lookup_title(other, &title) {
        Some(node) => CliError::Message(format!(
            "no {kind} titled `{root}`, but {other} page id {} matches exactly; \
             check the query kind",
            node.id
        )),
        None => CliError::Message(format!("no {kind} titled `{root}` in the snapshot")),
    })
}

fn cmd_query(config: &Config, args: &QueryArgs) -> Result<(), CliError> {
    let started = Instant::now();

    let (graph, pinned) = match &args.frozen {
        Some(label) => {
            let registry = FreezeRegistry::open(config.registry_dir())?;
            let (graph, store) = registry.open_frozen(label, &config.ts_dir())?;
            (graph, Some(store))
        }
        None => (load_graph(config)?, None),
    };

    let range = parse_range(&args.from, &args.to)?;
    if args.visits_threshold.is_some() && range.is_none() {
        return Err(CliError::Usage(
            "--visits-threshold requires --from and --to".to_string(),
        ));
    }
    let store = if range.is_some() {
        let store = match pinned {
            Some(store) => store,
            None => {
                if !store_exists(&config.ts_dir()) {
                    return Err(CliError::Usage(format!(
                        "--from/--to given but no time-series store exists under {}; \
                         run `wikigraph ingest-counts` first",
                        config.ts_dir().display()
                    )));
                }
                TimeseriesStore::open(config.ts_dir())?
            }
        };
        if store.day_count() == 0 {
            return Err(CliError::Usage(
                "--from/--to given but the time-series store is empty".to_string(),
            ));
        }
        Some(store)
    } else {
        None
    };

    let engine = QueryEngine::new(&graph).with_node_ceiling(config.query_node_ceiling);
    let depth = parse_depth(&args.depth)?;
    let mut sub = match args.kind {
        QueryKindArg::Category => {
            let root = lookup_root(&graph, NodeKind::Category, &args.root)?;
            engine.category_closure(root, depth)?
        }
        QueryKindArg::Neighborhood => {
            let root = lookup_root(&graph, NodeKind::Article, &args.root)?;
            let hops = match depth {
                DepthSpec::Bounded(d) if d >= 1 => d,
                DepthSpec::Bounded(_) => {
                    return Err(CliError::Usage(
                        "neighborhood --depth must be at least 1".to_string(),
                    ))
                }
                DepthSpec::Unlimited => {
                    return Err(CliError::Usage(
                        "neighborhood --depth must be finite".to_string(),
                    ))
                }
            };
            engine.neighborhood(root, hops, args.max_out_degree)?
        }
    };

    if let (Some(threshold), Some((from, to))) = (args.visits_threshold, range) {
        sub = engine.filter_by_visits(&sub, store.as_ref().expect("store opened"), threshold, from, to)?;
    }
    if let Some((from, to)) = range {
        sub = engine.attach_series(&sub, store.as_ref().expect("store opened"), from, to)?;
    }

    let format = ExportFormat::from_name(&args.format).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown --format `{}` (expected csv, json, or graphml)",
            args.format
        ))
    })?;
    let stats = query_stats(&sub, &args.depth, started);

    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            export(&sub, format, &mut file)?;
            file.flush()?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        None => {
            // export owns stdout; the stats line moves to stderr
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            export(&sub, format, &mut lock)?;
            lock.flush()?;
            eprintln!("{}", serde_json::to_string(&stats)?);
        }
    }
    Ok(())
}

/// Stats with the same columns as the upstream measurement tables:
/// articles, hyperlinks, subcategories, search depth, processing time.
fn query_stats(sub: &Subgraph, depth: &str, started: Instant) -> serde_json::Value {
    json!({
        "articles": sub.stats.articles,
        "hyperlinks": sub.stats.hyperlinks,
        "subcategories": sub.stats.subcategories,
        "search_depth": depth,
        "processing_time_ms": started.elapsed().as_millis() as u64,
        "nodes": sub.nodes.len(),
        "snapshot": sub.provenance.snapshot,
    })
}

fn cmd_update(config: &Config, args: &UpdateArgs) -> Result<(), CliError> {
    let old = load_graph(config)?;
    let new = load_snapshot(&args.new_snapshot)?;
    let delta = diff_graphs(&old, &new);
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| new.id().label.clone());
    let rebuilt = apply_delta(&old, &delta, &label)?;
    if rebuilt.id().content_hash != new.id().content_hash {
        return Err(CliError::Message(
            "internal error: applied delta does not reproduce the target snapshot".to_string(),
        ));
    }

    if let Some(audit) = &args.audit {
        let json = serde_json::to_string_pretty(&delta)? + "\n";
        fs::write(audit, json)?;
    }
    save_snapshot(&rebuilt, &config.graph_path())?;

    let report = json!({
        "old": old.id(),
        "new": rebuilt.id(),
        "changes": {
            "nodes_added": delta.nodes_added.len(),
            "nodes_removed": delta.nodes_removed.len(),
            "edges_added": delta.edges_added.len(),
            "edges_removed": delta.edges_removed.len(),
        },
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_freeze(config: &Config, args: &FreezeArgs) -> Result<(), CliError> {
    let label = &args.label;
    let monthly = label.len() == 7
        && label.as_bytes()[4] == b'-'
        && label[..4].bytes().all(|b| b.is_ascii_digit())
        && label[5..].bytes().all(|b| b.is_ascii_digit());
    if !monthly {
        return Err(CliError::Usage(format!(
            "--label must be a month, `YYYY-MM`, got `{label}`"
        )));
    }

    let graph = load_graph(config)?;
    let store = TimeseriesStore::open(config.ts_dir())?;
    let mut registry = FreezeRegistry::open(config.registry_dir())?;
    registry.freeze(&graph, &store, label)?;
    let record = registry.find(label).expect("record just written");
    println!("{}", serde_json::to_string_pretty(record)?);
    Ok(())
}

fn cmd_stats(config: &Config, args: &StatsArgs) -> Result<(), CliError> {
    let (graph, store) = match &args.frozen {
        Some(label) => {
            let registry = FreezeRegistry::open(config.registry_dir())?;
            let (graph, store) = registry.open_frozen(label, &config.ts_dir())?;
            (graph, Some(store))
        }
        None => {
            let graph = load_graph(config)?;
            let store = if store_exists(&config.ts_dir()) {
                Some(TimeseriesStore::open(config.ts_dir())?)
            } else {
                None
            };
            (graph, store)
        }
    };

    let timeseries = match &store {
        Some(store) => {
            let manifest = store.manifest();
            json!({
                "days": store.day_count(),
                "records": store.stored_records(),
                "first_day": manifest.keys().next(),
                "last_day": manifest.keys().next_back(),
            })
        }
        None => json!({ "days": 0, "records": 0 }),
    };
    let report = json!({
        "snapshot": graph.id(),
        "graph": graph.counts(),
        "timeseries": timeseries,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
