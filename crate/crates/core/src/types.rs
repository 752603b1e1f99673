//! Domain types shared across the crate: page ids, titles, node and edge
//! kinds, and snapshot identifiers.

use std::borrow::Cow;
use std::fmt;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// The article namespace in MediaWiki dumps.
pub const NS_ARTICLE: i32 = 0;
/// The category namespace in MediaWiki dumps.
pub const NS_CATEGORY: i32 = 14;

/// Stable page id taken from the dump. Never re-assigned, so it works as a
/// join key between the graph, the time-series store and across snapshots.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PageId(pub u64);

impl fmt::Debug for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PageId({})", self.0)
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A page title as raw bytes, underscores for spaces, exactly as it appears
/// in the dumps. No Unicode normalization is performed: titles are byte-exact
/// join keys between SQL dumps and pagecount files.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Title(Vec<u8>);

impl Title {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Title(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Lossy UTF-8 view for display and text exports.
    pub fn to_display(&self) -> Cow<'_, str> {
        String::from_utf8_lossy(&self.0)
    }
}

impl From<&str> for Title {
    fn from(s: &str) -> Self {
        Title(s.as_bytes().to_vec())
    }
}

impl From<&[u8]> for Title {
    fn from(b: &[u8]) -> Self {
        Title(b.to_vec())
    }
}

impl From<Vec<u8>> for Title {
    fn from(b: Vec<u8>) -> Self {
        Title(b)
    }
}

impl fmt::Debug for Title {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Title({:?})", self.to_display())
    }
}

// JSON views of titles are lossy UTF-8; byte-exact titles live only in
// binary snapshots
impl Serialize for Title {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_display())
    }
}

impl fmt::Display for Title {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_display())
    }
}

/// Node kind: article (namespace 0) or category (namespace 14).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Article,
    Category,
}

impl NodeKind {
    /// Maps a dump namespace to a node kind. Namespaces outside the
    /// article/category whitelist have no kind.
    pub fn from_namespace(ns: i32) -> Option<NodeKind> {
        match ns {
            NS_ARTICLE => Some(NodeKind::Article),
            NS_CATEGORY => Some(NodeKind::Category),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Article => "article",
            NodeKind::Category => "category",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge kind. `links_to` connects article to article, `belongs_to` connects
/// an article or subcategory to a parent category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    LinksTo,
    BelongsTo,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::LinksTo => "links_to",
            EdgeKind::BelongsTo => "belongs_to",
        }
    }

    /// Endpoint constraint for this edge kind.
    pub fn endpoints_valid(&self, source: NodeKind, target: NodeKind) -> bool {
        match self {
            EdgeKind::LinksTo => source == NodeKind::Article && target == NodeKind::Article,
            EdgeKind::BelongsTo => target == NodeKind::Category,
        }
    }

    pub fn from_str_opt(s: &str) -> Option<EdgeKind> {
        match s {
            "links_to" => Some(EdgeKind::LinksTo),
            "belongs_to" => Some(EdgeKind::BelongsTo),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Traversal direction over stored adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
}

/// A graph node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Node {
    pub id: PageId,
    pub title: Title,
    pub kind: NodeKind,
}

impl Node {
    pub fn new(id: PageId, title: impl Into<Title>, kind: NodeKind) -> Self {
        Node { id, title: title.into(), kind }
    }

    pub fn article(id: u64, title: &str) -> Self {
        Node::new(PageId(id), title, NodeKind::Article)
    }

    pub fn category(id: u64, title: &str) -> Self {
        Node::new(PageId(id), title, NodeKind::Category)
    }
}

/// A directed typed edge between two stored nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub source: PageId,
    pub target: PageId,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn new(source: PageId, target: PageId, kind: EdgeKind) -> Self {
        Edge { source, target, kind }
    }

    pub fn links_to(source: u64, target: u64) -> Self {
        Edge::new(PageId(source), PageId(target), EdgeKind::LinksTo)
    }

    pub fn belongs_to(source: u64, target: u64) -> Self {
        Edge::new(PageId(source), PageId(target), EdgeKind::BelongsTo)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} -{}-> {})", self.source, self.kind, self.target)
    }
}

/// Identifier of a graph snapshot: a human label plus a content hash.
/// Two snapshots with equal node and edge sets have equal hashes regardless
/// of label; frozen monthly labels (`YYYY-MM`) sort chronologically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotId {
    pub label: String,
    pub content_hash: [u8; 32],
}

impl SnapshotId {
    pub fn new(label: impl Into<String>, content_hash: [u8; 32]) -> Self {
        SnapshotId { label: label.into(), content_hash }
    }

    pub fn hash_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in &self.content_hash {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Short human form: label plus the first 12 hex digits of the hash.
    pub fn short(&self) -> String {
        format!("{}-{}", self.label, &self.hash_hex()[..12])
    }

    /// Parses the 64-digit hex form produced by [`SnapshotId::hash_hex`].
    pub fn hash_from_hex(hex: &str) -> Option<[u8; 32]> {
        let bytes = hex.as_bytes();
        if bytes.len() != 64 {
            return None;
        }
        let digit = |b: u8| -> Option<u8> {
            match b {
                b'0'..=b'9' => Some(b - b'0'),
                b'a'..=b'f' => Some(b - b'a' + 10),
                b'A'..=b'F' => Some(b - b'A' + 10),
                _ => None,
            }
        };
        let mut out = [0u8; 32];
        for (i, pair) in bytes.chunks_exact(2).enumerate() {
            out[i] = digit(pair[0])? << 4 | digit(pair[1])?;
        }
        Some(out)
    }
}

// serialized as {label, content_hash: <hex>} so manifests stay readable
impl Serialize for SnapshotId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("SnapshotId", 2)?;
        s.serialize_field("label", &self.label)?;
        s.serialize_field("content_hash", &self.hash_hex())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for SnapshotId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            label: String,
            content_hash: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        let content_hash = SnapshotId::hash_from_hex(&raw.content_hash)
            .ok_or_else(|| serde::de::Error::custom("content_hash is not 64 hex digits"))?;
        Ok(SnapshotId { label: raw.label, content_hash })
    }
}

impl fmt::Display for SnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short())
    }
}

/// True when the timestamp lies exactly on an hour boundary.
pub fn is_hour_aligned(t: DateTime<Utc>) -> bool {
    t.timestamp() % 3600 == 0
}

/// UTC calendar day containing the given hour.
pub fn day_of(t: DateTime<Utc>) -> NaiveDate {
    t.date_naive()
}

/// Start of a UTC calendar day as a timestamp.
pub fn day_start(day: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).expect("midnight exists"))
}

/// Hour timestamp from epoch seconds. Panics if the value is not hour-aligned;
/// callers own alignment checks at the boundaries.
pub fn hour_from_epoch(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(secs, 0).single().expect("valid epoch seconds")
}
