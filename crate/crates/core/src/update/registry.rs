//! Frozen snapshot bundles and their registry.
//!
//! A freeze captures a graph snapshot together with the day manifest of the
//! time-series store under an immutable label. The bundle directory holds a
//! full copy of the graph file plus the manifest; segment files themselves
//! are content-addressed and never rewritten, so pinning their names is
//! enough to keep a frozen view stable while the live store moves on.
//!
//! The freeze id hashes the graph content hash and every (day, segment
//! hash) pair — not the label and not the creation time — so freezing equal
//! content twice yields the same id.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::UpdateError;
use crate::graph::{load_snapshot, save_snapshot, GraphCounts, GraphSnapshot};
use crate::timeseries::{DayManifest, TimeseriesStore};
use crate::types::SnapshotId;
use crate::util;

const INDEX_FILE: &str = "index.json";
const BUNDLE_DIR: &str = "snapshots";
const GRAPH_FILE: &str = "graph.snap";
const TS_MANIFEST_FILE: &str = "ts_manifest.json";
const FREEZE_DOMAIN_TAG: &[u8] = b"wikigraph.freeze.v1";

/// Day span covered by the time-series half of a freeze.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCoverage {
    pub days: u64,
    pub first: Option<NaiveDate>,
    pub last: Option<NaiveDate>,
}

/// One registry entry. `content_hash` is the freeze hash, not the bare graph
/// hash; `created_at` is informational and excluded from the hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreezeRecord {
    pub label: String,
    pub content_hash: String,
    pub created_at: DateTime<Utc>,
    pub graph_counts: GraphCounts,
    pub ts_day_coverage: DayCoverage,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    snapshots: Vec<FreezeRecord>,
}

/// Registry of frozen snapshots rooted at one directory.
#[derive(Debug)]
pub struct FreezeRegistry {
    dir: PathBuf,
    records: Vec<FreezeRecord>,
}

fn label_is_safe(label: &str) -> bool {
    !label.is_empty()
        && label
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
        && label != "."
        && label != ".."
}

fn freeze_hash(graph: &GraphSnapshot, segments: &BTreeMap<NaiveDate, [u8; 32]>) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(FREEZE_DOMAIN_TAG);
    hasher.update(graph.id().content_hash);
    for (day, hash) in segments {
        hasher.update(day.to_string().as_bytes());
        hasher.update([0u8]);
        hasher.update(hash);
    }
    hasher.finalize().into()
}

fn coverage(manifest: &DayManifest) -> DayCoverage {
    DayCoverage {
        days: manifest.len() as u64,
        first: manifest.keys().next().copied(),
        last: manifest.keys().next_back().copied(),
    }
}

impl FreezeRegistry {
    /// Opens (or initializes) a registry directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, UpdateError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join(BUNDLE_DIR))?;
        let index_path = dir.join(INDEX_FILE);
        let records = if index_path.exists() {
            let text = fs::read_to_string(&index_path)?;
            let index: IndexFile = serde_json::from_str(&text)?;
            index.snapshots
        } else {
            Vec::new()
        };
        Ok(FreezeRegistry { dir, records })
    }

    pub fn records(&self) -> &[FreezeRecord] {
        &self.records
    }

    pub fn find(&self, label: &str) -> Option<&FreezeRecord> {
        self.records.iter().find(|r| r.label == label)
    }

    fn bundle_dir(&self, label: &str) -> PathBuf {
        self.dir.join(BUNDLE_DIR).join(label)
    }

    /// Freezes `graph` plus the current day manifest of `store` under
    /// `label`. The bundle is staged in a temporary directory and renamed
    /// into place, so a crash never leaves a half-written bundle under its
    /// final name.
    pub fn freeze(
        &mut self,
        graph: &GraphSnapshot,
        store: &TimeseriesStore,
        label: &str,
    ) -> Result<SnapshotId, UpdateError> {
        if !label_is_safe(label) {
            return Err(UpdateError::InvalidLabel(label.to_string()));
        }
        let bundle = self.bundle_dir(label);
        if self.find(label).is_some() || bundle.exists() {
            return Err(UpdateError::DuplicateLabel(label.to_string()));
        }

        let manifest = store.manifest();
        let hash = freeze_hash(graph, &store.segment_hashes());
        let id = SnapshotId::new(label, hash);

        let staging = self.dir.join(BUNDLE_DIR).join(format!(".{label}.tmp"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        save_snapshot(graph, &staging.join(GRAPH_FILE))?;
        let manifest_json = serde_json::to_string_pretty(&manifest)? + "\n";
        util::write_atomic(&staging.join(TS_MANIFEST_FILE), manifest_json.as_bytes())?;
        fs::rename(&staging, &bundle)?;

        self.records.push(FreezeRecord {
            label: label.to_string(),
            content_hash: id.hash_hex(),
            created_at: Utc::now(),
            graph_counts: graph.counts(),
            ts_day_coverage: coverage(&manifest),
        });
        self.records.sort_by(|a, b| a.label.cmp(&b.label));
        self.save_index()?;
        Ok(id)
    }

    fn save_index(&self) -> Result<(), UpdateError> {
        let index = IndexFile {
            version: 1,
            snapshots: self.records.clone(),
        };
        let json = serde_json::to_string_pretty(&index)? + "\n";
        util::write_atomic(&self.dir.join(INDEX_FILE), json.as_bytes())?;
        Ok(())
    }

    /// Opens a frozen bundle: the graph copy plus a read-only store view
    /// pinned to the frozen day manifest. `ts_dir` is the live store
    /// directory holding the segment files. The freeze hash is recomputed
    /// from what was actually loaded and checked against the registry.
    pub fn open_frozen(
        &self,
        label: &str,
        ts_dir: &Path,
    ) -> Result<(GraphSnapshot, TimeseriesStore), UpdateError> {
        let record = self
            .find(label)
            .ok_or_else(|| UpdateError::UnknownLabel(label.to_string()))?;
        let bundle = self.bundle_dir(label);
        let graph = load_snapshot(&bundle.join(GRAPH_FILE))?;
        let manifest_text = fs::read_to_string(bundle.join(TS_MANIFEST_FILE))?;
        let manifest: DayManifest = serde_json::from_str(&manifest_text)?;
        let store = TimeseriesStore::open_pinned(ts_dir, &manifest)?;
        let recomputed = SnapshotId::new(label, freeze_hash(&graph, &store.segment_hashes()));
        if recomputed.hash_hex() != record.content_hash {
            return Err(UpdateError::BundleMismatch {
                label: label.to_string(),
                reason: format!(
                    "freeze hash {} != recorded {}",
                    recomputed.hash_hex(),
                    record.content_hash
                ),
            });
        }
        Ok((graph, store))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::timeseries::{DailyThresholdPolicy, PagecountRecord};
    use crate::types::{Edge, Node, PageId};
    use chrono::TimeZone;

    fn graph(label: &str) -> GraphSnapshot {
        build_graph(
            vec![
                Node::article(1, "A"),
                Node::article(2, "B"),
                Node::category(10, "C"),
            ],
            &[Edge::links_to(1, 2), Edge::belongs_to(1, 10)],
            label,
        )
        .unwrap()
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn seed_store(dir: &Path) -> TimeseriesStore {
        let mut store = TimeseriesStore::open(dir).unwrap();
        let hour = Utc.with_ymd_and_hms(2018, 8, 1, 6, 0, 0).unwrap();
        store
            .ingest_day(
                day(2018, 8, 1),
                &[PagecountRecord { page_id: PageId(1), hour, count: 500 }],
                DailyThresholdPolicy::default(),
                0,
            )
            .unwrap();
        store
    }

    #[test]
    fn freeze_and_reopen() {
        let root = tempfile::tempdir().unwrap();
        let ts_dir = root.path().join("ts");
        let store = seed_store(&ts_dir);
        let g = graph("live");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();

        let id = registry.freeze(&g, &store, "2018-08").unwrap();
        assert_eq!(id.label, "2018-08");

        let record = registry.find("2018-08").unwrap();
        assert_eq!(record.content_hash, id.hash_hex());
        assert_eq!(record.graph_counts, g.counts());
        assert_eq!(record.ts_day_coverage.days, 1);
        assert_eq!(record.ts_day_coverage.first, Some(day(2018, 8, 1)));

        let (frozen_graph, frozen_store) = registry
            .open_frozen("2018-08", &ts_dir)
            .unwrap();
        assert_eq!(frozen_graph.id().content_hash, g.id().content_hash);
        assert_eq!(frozen_store.day_count(), 1);
    }

    #[test]
    fn duplicate_label_rejected() {
        let root = tempfile::tempdir().unwrap();
        let store = seed_store(&root.path().join("ts"));
        let g = graph("live");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        registry.freeze(&g, &store, "2018-08").unwrap();
        let err = registry.freeze(&g, &store, "2018-08").unwrap_err();
        assert!(matches!(err, UpdateError::DuplicateLabel(_)));
    }

    #[test]
    fn equal_content_freezes_to_equal_hashes() {
        let root = tempfile::tempdir().unwrap();
        let store = seed_store(&root.path().join("ts"));
        // same node and edge sets under different build labels
        let g1 = graph("first");
        let g2 = graph("second");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        let id1 = registry.freeze(&g1, &store, "2018-08").unwrap();
        let id2 = registry.freeze(&g2, &store, "2018-09").unwrap();
        assert_eq!(id1.content_hash, id2.content_hash);
        assert_ne!(id1.label, id2.label);
    }

    #[test]
    fn different_ts_content_changes_the_freeze_hash() {
        let root = tempfile::tempdir().unwrap();
        let mut store = seed_store(&root.path().join("ts"));
        let g = graph("live");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        let id1 = registry.freeze(&g, &store, "a").unwrap();
        let hour = Utc.with_ymd_and_hms(2018, 8, 2, 6, 0, 0).unwrap();
        store
            .ingest_day(
                day(2018, 8, 2),
                &[PagecountRecord { page_id: PageId(1), hour, count: 900 }],
                DailyThresholdPolicy::default(),
                0,
            )
            .unwrap();
        let id2 = registry.freeze(&g, &store, "b").unwrap();
        assert_ne!(id1.content_hash, id2.content_hash);
    }

    #[test]
    fn frozen_view_ignores_later_reingest() {
        let root = tempfile::tempdir().unwrap();
        let ts_dir = root.path().join("ts");
        let mut store = seed_store(&ts_dir);
        let g = graph("live");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        registry.freeze(&g, &store, "2018-08").unwrap();

        // replace day 1 data in the live store
        let hour = Utc.with_ymd_and_hms(2018, 8, 1, 9, 0, 0).unwrap();
        store
            .ingest_day(
                day(2018, 8, 1),
                &[PagecountRecord { page_id: PageId(1), hour, count: 7_000 }],
                DailyThresholdPolicy::default(),
                0,
            )
            .unwrap();

        let (_, frozen_store) = registry.open_frozen("2018-08", &ts_dir).unwrap();
        let start = Utc.with_ymd_and_hms(2018, 8, 1, 0, 0, 0).unwrap();
        let end = Utc.with_ymd_and_hms(2018, 8, 2, 0, 0, 0).unwrap();
        let series = frozen_store.query_range(PageId(1), start, end).unwrap();
        // the frozen view still sees the original 06:00 record
        assert_eq!(series, vec![(Utc.with_ymd_and_hms(2018, 8, 1, 6, 0, 0).unwrap(), 500)]);
    }

    #[test]
    fn registry_survives_reopen() {
        let root = tempfile::tempdir().unwrap();
        let store = seed_store(&root.path().join("ts"));
        let g = graph("live");
        let registry_dir = root.path().join("registry");
        let id = {
            let mut registry = FreezeRegistry::open(&registry_dir).unwrap();
            registry.freeze(&g, &store, "2018-08").unwrap()
        };
        let registry = FreezeRegistry::open(&registry_dir).unwrap();
        assert_eq!(registry.records().len(), 1);
        assert_eq!(registry.find("2018-08").unwrap().content_hash, id.hash_hex());
    }

    #[test]
    fn bad_labels_rejected() {
        let root = tempfile::tempdir().unwrap();
        let store = seed_store(&root.path().join("ts"));
        let g = graph("live");
        let mut registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        for label in ["", "a/b", "..", "a b"] {
            let err = registry.freeze(&g, &store, label).unwrap_err();
            assert!(matches!(err, UpdateError::InvalidLabel(_)), "{label}");
        }
    }

    #[test]
    fn unknown_label_errors() {
        let root = tempfile::tempdir().unwrap();
        let registry = FreezeRegistry::open(root.path().join("registry")).unwrap();
        let err = registry
            .open_frozen("nope", &root.path().join("ts"))
            .unwrap_err();
        assert!(matches!(err, UpdateError::UnknownLabel(_)));
    }

    #[test]
    fn bundle_holds_graph_and_manifest() {
        let root = tempfile::tempdir().unwrap();
        let store = seed_store(&root.path().join("ts"));
        let g = graph("live");
        let registry_dir = root.path().join("registry");
        let mut registry = FreezeRegistry::open(&registry_dir).unwrap();
        registry.freeze(&g, &store, "2018-08").unwrap();
        let bundle = registry_dir.join("snapshots").join("2018-08");
        assert!(bundle.join("graph.snap").is_file());
        assert!(bundle.join("ts_manifest.json").is_file());
        // no staging directory left behind
        assert!(!registry_dir.join("snapshots").join(".2018-08.tmp").exists());
    }
}
