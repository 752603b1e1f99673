//! Hourly viewership store.
//!
//! Counts are keyed by (page_id, hour) and partitioned into one segment file
//! per UTC calendar day (see [`segment`]). Ingestion applies the daily
//! threshold: a page's hourly records for a day are stored only when the
//! page's daily total reaches the threshold, and zero-count hours are never
//! stored. `current.json` maps each day to its live segment; re-ingesting a
//! day writes a new segment and repoints the map, leaving the old file for
//! any frozen manifest that still references it.

mod segment;

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dump::RawCount;
use crate::graph::GraphSnapshot;
use crate::types::{day_of, hour_from_epoch, is_hour_aligned, NodeKind, PageId, Title};
use crate::util::write_atomic;

use segment::{Segment, SegmentCursor, Triple};

/// Default daily visit threshold below which a page-day is not stored.
pub const DEFAULT_DAILY_THRESHOLD: u64 = 100;

const MANIFEST_FILE: &str = "current.json";
const MANIFEST_VERSION: u32 = 1;

/// One stored observation: visits to one page during one UTC hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PagecountRecord {
    pub page_id: PageId,
    pub hour: DateTime<Utc>,
    pub count: u32,
}

/// The ingest-time filter: keep a page's hourly records for a day iff the
/// page's daily total is at least `threshold` visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailyThresholdPolicy {
    pub threshold: u64,
}

impl Default for DailyThresholdPolicy {
    fn default() -> Self {
        DailyThresholdPolicy { threshold: DEFAULT_DAILY_THRESHOLD }
    }
}

/// What one day's ingest did. `records_seen` counts the distinct nonzero
/// (page, hour) entries before thresholding, so `records_stored /
/// records_seen` is the threshold's reduction ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub pages_seen: u64,
    pub pages_kept: u64,
    pub records_seen: u64,
    pub records_stored: u64,
    pub unresolved_titles: u64,
}

#[derive(Debug, Error)]
pub enum TsError {
    #[error("i/o error in time-series store: {0}")]
    Io(#[from] std::io::Error),
    #[error("time-series manifest unreadable: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a time-series segment (bad magic)")]
    BadMagic,
    #[error("unsupported segment format version {found}")]
    VersionMismatch { found: u32 },
    #[error("segment checksum mismatch")]
    ChecksumMismatch,
    #[error("segment file truncated: {0}")]
    Truncated(&'static str),
    #[error("segment file inconsistent: {0}")]
    Corrupt(String),
    #[error("hour {0} is not aligned to an hour boundary")]
    UnalignedHour(DateTime<Utc>),
    #[error("record for page {page} at {hour} lies outside ingest day {day}")]
    RecordOutsideDay {
        page: PageId,
        hour: DateTime<Utc>,
        day: NaiveDate,
    },
    #[error("invalid query range: start {start} after end {end}")]
    InvalidRange {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("store is read-only (pinned to a frozen manifest)")]
    ReadOnly,
    #[error("manifest references missing segment {0}")]
    MissingSegment(String),
}

/// Day-to-segment-file mapping. This is exactly what gets embedded in a
/// frozen bundle: segment files are content-addressed and never rewritten,
/// so the mapping alone pins a full time-series state.
pub type DayManifest = BTreeMap<NaiveDate, String>;

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    version: u32,
    days: DayManifest,
}

/// The live (or pinned) time-series store.
pub struct TimeseriesStore {
    dir: PathBuf,
    days: BTreeMap<NaiveDate, Arc<Segment>>,
    writable: bool,
}

impl std::fmt::Debug for TimeseriesStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeseriesStore")
            .field("dir", &self.dir)
            .field("days", &self.days.len())
            .field("writable", &self.writable)
            .finish()
    }
}

/// True when `dir` holds a store manifest, i.e. at least one day has ever
/// been ingested there. Never creates anything.
pub fn store_exists(dir: &std::path::Path) -> bool {
    dir.join(MANIFEST_FILE).is_file()
}

impl TimeseriesStore {
    /// Opens (creating if needed) the live store in `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, TsError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest: DayManifest = if manifest_path.exists() {
            let file: ManifestFile = serde_json::from_slice(&std::fs::read(&manifest_path)?)?;
            if file.version != MANIFEST_VERSION {
                return Err(TsError::Corrupt(format!(
                    "unsupported manifest version {}",
                    file.version
                )));
            }
            file.days
        } else {
            DayManifest::new()
        };
        let days = open_segments(&dir, &manifest)?;
        Ok(TimeseriesStore { dir, days, writable: true })
    }

    /// Opens a read-only view over an explicit day-to-segment mapping, as
    /// recorded by a frozen bundle. Ingestion is rejected.
    pub fn open_pinned(dir: impl Into<PathBuf>, manifest: &DayManifest) -> Result<Self, TsError> {
        let dir = dir.into();
        let days = open_segments(&dir, manifest)?;
        Ok(TimeseriesStore { dir, days, writable: false })
    }

    /// The current day-to-segment mapping.
    pub fn manifest(&self) -> DayManifest {
        self.days
            .iter()
            .map(|(day, seg)| (*day, seg.file_name.clone()))
            .collect()
    }

    /// Per-day segment content hashes, in day order.
    pub fn segment_hashes(&self) -> BTreeMap<NaiveDate, [u8; 32]> {
        self.days
            .iter()
            .map(|(day, seg)| (*day, seg.content_hash))
            .collect()
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn stored_records(&self) -> u64 {
        self.days.values().map(|s| s.triple_count()).sum()
    }

    /// Ingests one day of id-resolved records, applying the threshold per
    /// page. Duplicate (page, hour) entries are summed before thresholding.
    /// Re-ingesting a day replaces it page by page: every page seen in the
    /// input loses its previously stored records for that day, whether or
    /// not its new data passes the threshold; unseen pages carry over.
    /// `unresolved_titles` is the count of raw records the caller failed to
    /// resolve to page ids; it is passed through into the summary.
    pub fn ingest_day(
        &mut self,
        day: NaiveDate,
        records: &[PagecountRecord],
        policy: DailyThresholdPolicy,
        unresolved_titles: u64,
    ) -> Result<IngestSummary, TsError> {
        if !self.writable {
            return Err(TsError::ReadOnly);
        }
        let mut summed: BTreeMap<(u64, i64), u64> = BTreeMap::new();
        for rec in records {
            if !is_hour_aligned(rec.hour) {
                return Err(TsError::UnalignedHour(rec.hour));
            }
            if day_of(rec.hour) != day {
                return Err(TsError::RecordOutsideDay {
                    page: rec.page_id,
                    hour: rec.hour,
                    day,
                });
            }
            *summed
                .entry((rec.page_id.0, rec.hour.timestamp()))
                .or_insert(0) += rec.count as u64;
        }
        let mut totals: HashMap<u64, u64> = HashMap::new();
        for (&(page, _), &count) in &summed {
            *totals.entry(page).or_insert(0) += count;
        }
        let kept: HashSet<u64> = totals
            .iter()
            .filter(|&(_, &total)| total >= policy.threshold)
            .map(|(&page, _)| page)
            .collect();

        let mut records_seen = 0u64;
        let mut new_triples: Vec<Triple> = Vec::new();
        for (&(page, hour), &count) in &summed {
            if count == 0 {
                continue;
            }
            records_seen += 1;
            if kept.contains(&page) {
                new_triples.push((page, hour, count.min(u32::MAX as u64) as u32));
            }
        }
        let records_stored = new_triples.len() as u64;

        let seen: HashSet<u64> = totals.keys().copied().collect();
        let mut merged = new_triples;
        if let Some(old) = self.days.get(&day) {
            for triple in old.cursor() {
                let (page, hour, count) = triple?;
                if !seen.contains(&page) {
                    merged.push((page, hour, count));
                }
            }
        }
        merged.sort_unstable();

        let name = segment::write_segment(&self.dir, day, &merged)?;
        let seg = Segment::open(&self.dir.join(&name), day)?;
        self.days.insert(day, Arc::new(seg));
        self.save_manifest()?;

        Ok(IngestSummary {
            pages_seen: totals.len() as u64,
            pages_kept: kept.len() as u64,
            records_seen,
            records_stored,
            unresolved_titles,
        })
    }

    fn save_manifest(&self) -> Result<(), TsError> {
        let file = ManifestFile {
            version: MANIFEST_VERSION,
            days: self.manifest(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join(MANIFEST_FILE), &bytes)?;
        Ok(())
    }

    fn check_range(
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<(), TsError> {
        if !is_hour_aligned(start) {
            return Err(TsError::UnalignedHour(start));
        }
        if !is_hour_aligned(end) {
            return Err(TsError::UnalignedHour(end));
        }
        if start > end {
            return Err(TsError::InvalidRange { start, end });
        }
        Ok(())
    }

    fn segments_overlapping(
        &self,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> impl Iterator<Item = &Arc<Segment>> {
        let first = day_of(start);
        let last = day_of(end - Duration::hours(1));
        self.days.range(first..=last).map(|(_, seg)| seg)
    }

    /// Stored (hour, count) pairs for one page with start ≤ hour < end,
    /// ascending. A page with nothing stored yields an empty sequence.
    pub fn query_range(
        &self,
        page: PageId,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Vec<(DateTime<Utc>, u32)>, TsError> {
        Self::check_range(start, end)?;
        let mut out = Vec::new();
        if start == end {
            return Ok(out);
        }
        for seg in self.segments_overlapping(start, end) {
            for (hour, count) in seg.query(page.0, start.timestamp(), end.timestamp())? {
                out.push((hour_from_epoch(hour), count));
            }
        }
        Ok(out)
    }

    /// Page ids whose stored counts in [start, end) sum to strictly more
    /// than `total_threshold`, ascending.
    pub fn pages_above(
        &self,
        total_threshold: u64,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Vec<PageId>, TsError> {
        Self::check_range(start, end)?;
        let mut sums: HashMap<u64, u64> = HashMap::new();
        if start < end {
            let (lo, hi) = (start.timestamp(), end.timestamp());
            for seg in self.segments_overlapping(start, end) {
                for triple in seg.cursor() {
                    let (page, hour, count) = triple?;
                    if hour >= lo && hour < hi {
                        *sums.entry(page).or_insert(0) += count as u64;
                    }
                }
            }
        }
        let mut pages: Vec<PageId> = sums
            .into_iter()
            .filter(|&(_, sum)| sum > total_threshold)
            .map(|(page, _)| PageId(page))
            .collect();
        pages.sort_unstable();
        Ok(pages)
    }

    /// Full scan in strictly increasing (page_id, hour) order across all
    /// days. Keys are unique: each (page, day) lives in exactly one segment.
    pub fn scan(&self) -> StoreScan {
        let mut cursors: Vec<SegmentCursor> = Vec::with_capacity(self.days.len());
        let mut heap = BinaryHeap::new();
        let mut failed = None;
        for seg in self.days.values() {
            let mut cursor = seg.cursor();
            match cursor.next() {
                Some(Ok(triple)) => {
                    heap.push(std::cmp::Reverse((triple, cursors.len())));
                }
                Some(Err(e)) => failed = Some(e),
                None => {}
            }
            cursors.push(cursor);
        }
        StoreScan { cursors, heap, failed }
    }
}

fn open_segments(
    dir: &std::path::Path,
    manifest: &DayManifest,
) -> Result<BTreeMap<NaiveDate, Arc<Segment>>, TsError> {
    let mut days = BTreeMap::new();
    for (day, name) in manifest {
        let path = dir.join(name);
        if !path.exists() {
            return Err(TsError::MissingSegment(name.clone()));
        }
        days.insert(*day, Arc::new(Segment::open(&path, *day)?));
    }
    Ok(days)
}

/// K-way merged iterator over every stored record; see
/// [`TimeseriesStore::scan`].
pub struct StoreScan {
    cursors: Vec<SegmentCursor>,
    heap: BinaryHeap<std::cmp::Reverse<(Triple, usize)>>,
    failed: Option<TsError>,
}

impl Iterator for StoreScan {
    type Item = Result<PagecountRecord, TsError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.failed.take() {
            self.heap.clear();
            return Some(Err(e));
        }
        let std::cmp::Reverse(((page, hour, count), idx)) = self.heap.pop()?;
        match self.cursors[idx].next() {
            Some(Ok(triple)) => self.heap.push(std::cmp::Reverse((triple, idx))),
            Some(Err(e)) => self.failed = Some(e),
            None => {}
        }
        Some(Ok(PagecountRecord {
            page_id: PageId(page),
            hour: hour_from_epoch(hour),
            count,
        }))
    }
}

/// Resolves raw pagecount titles to page ids against a graph snapshot.
/// Titles with a `Category:` prefix resolve in the category namespace, all
/// others as articles. Returns the resolved records and the count of records
/// whose title matched nothing.
pub fn resolve_titles(
    records: &[RawCount],
    graph: &GraphSnapshot,
) -> (Vec<PagecountRecord>, u64) {
    const CATEGORY_PREFIX: &[u8] = b"Category:";
    let mut resolved = Vec::with_capacity(records.len());
    let mut unresolved = 0u64;
    for rec in records {
        let bytes = rec.title.as_bytes();
        let (kind, title_bytes) = match bytes.strip_prefix(CATEGORY_PREFIX) {
            Some(rest) => (NodeKind::Category, rest),
            None => (NodeKind::Article, bytes),
        };
        match graph.lookup_title(kind, &Title::new(title_bytes)) {
            Some(node) => resolved.push(PagecountRecord {
                page_id: node.id,
                hour: rec.hour,
                count: rec.count.min(u32::MAX as u64) as u32,
            }),
            None => unresolved += 1,
        }
    }
    (resolved, unresolved)
}

/// CSV export of one page's series: header plus `page_id,hour_iso8601,count`
/// rows.
pub fn export_series_csv<W: Write>(
    w: &mut W,
    page: PageId,
    series: &[(DateTime<Utc>, u32)],
) -> std::io::Result<()> {
    writeln!(w, "page_id,hour_iso8601,count")?;
    for (hour, count) in series {
        writeln!(w, "{},{},{}", page, hour.format("%Y-%m-%dT%H:%M:%SZ"), count)?;
    }
    Ok(())
}

/// JSON export of one page's series: an array of [hour, count] pairs with
/// hours as epoch seconds.
pub fn export_series_json<W: Write>(
    w: &mut W,
    series: &[(DateTime<Utc>, u32)],
) -> Result<(), TsError> {
    let pairs: Vec<(i64, u32)> = series.iter().map(|(h, c)| (h.timestamp(), *c)).collect();
    serde_json::to_writer(&mut *w, &pairs)?;
    w.write_all(b"\n")?;
    Ok(())
}
