//! Binary snapshot files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic            8 bytes  "WGSNAPS1"
//! version          u32
//! label            u32 length + bytes
//! content_hash     32 bytes (hash of the node/edge content, label excluded)
//! counts           4 x u64  (articles, categories, links_to, belongs_to)
//! node_count       u64
//! node table       per node: id u64, kind u8, title u32 length + bytes
//! adjacency x 4    offsets u64 length + u64s, targets u64 length + u32s
//!                  (links_to out, links_to in, belongs_to out, belongs_to in)
//! trailer          sha256 of every preceding byte
//! ```
//!
//! Loading distinguishes four failure classes: wrong file type (magic),
//! unsupported format version, truncation (declared structures run past the
//! end), and checksum mismatch (bytes or content hash disagree). Writes go
//! through a temp file and a rename, so a crashed save never leaves a
//! half-written snapshot at the target path.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::{Node, NodeKind, PageId, SnapshotId, Title};
use crate::util::{publish, tmp_sibling, HashingWriter};

use super::{content_hash, Csr, GraphCounts, GraphSnapshot};

const MAGIC: &[u8; 8] = b"WGSNAPS1";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotFileError {
    #[error("i/o error on snapshot file: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a graph snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot format version {found} (this build reads {SNAPSHOT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("snapshot checksum mismatch: {0}")]
    ChecksumMismatch(&'static str),
    #[error("snapshot file truncated: {0}")]
    Truncated(&'static str),
    #[error("snapshot file inconsistent: {0}")]
    Corrupt(String),
}

/// Writes the snapshot to `path` atomically (temp file + rename).
pub fn save_snapshot(snapshot: &GraphSnapshot, path: &Path) -> Result<(), SnapshotFileError> {
    let tmp = tmp_sibling(path);
    let file = File::create(&tmp)?;
    let mut w = HashingWriter::new(BufWriter::new(file));

    w.write_all(MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    let label = snapshot.id.label.as_bytes();
    w.write_all(&(label.len() as u32).to_le_bytes())?;
    w.write_all(label)?;
    w.write_all(&snapshot.id.content_hash)?;
    for v in [
        snapshot.counts.articles,
        snapshot.counts.categories,
        snapshot.counts.links_to,
        snapshot.counts.belongs_to,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(snapshot.nodes.len() as u64).to_le_bytes())?;
    for node in &snapshot.nodes {
        w.write_all(&node.id.0.to_le_bytes())?;
        w.write_all(&[match node.kind {
            NodeKind::Article => 0u8,
            NodeKind::Category => 1u8,
        }])?;
        w.write_all(&(node.title.len() as u32).to_le_bytes())?;
        w.write_all(node.title.as_bytes())?;
    }
    for csr in &snapshot.adj {
        w.write_all(&(csr.offsets.len() as u64).to_le_bytes())?;
        for &off in &csr.offsets {
            w.write_all(&off.to_le_bytes())?;
        }
        w.write_all(&(csr.targets.len() as u64).to_le_bytes())?;
        for &t in &csr.targets {
            w.write_all(&t.to_le_bytes())?;
        }
    }
    let digest: [u8; 32] = w.hasher.finalize().into();
    let mut inner = w.inner;
    inner.write_all(&digest)?;
    let file = inner.into_inner().map_err(|e| e.into_error())?;
    publish(file, &tmp, path)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], SnapshotFileError> {
        if self.data.len() - self.pos < n {
            return Err(SnapshotFileError::Truncated(what));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, SnapshotFileError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, SnapshotFileError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, SnapshotFileError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// Length values come straight from the file; reject anything that could
    /// not fit in the remaining bytes before allocating for it.
    fn len_checked(&self, len: u64, unit: usize, what: &'static str) -> Result<usize, SnapshotFileError> {
        let bytes = (len as usize).checked_mul(unit);
        match bytes {
            Some(b) if b <= self.data.len() - self.pos => Ok(len as usize),
            _ => Err(SnapshotFileError::Truncated(what)),
        }
    }
}

/// Walks the declared structure without interpreting values, so truncation
/// is reported as truncation rather than as a checksum failure. Returns the
/// byte offset where the trailer must start.
fn structure_end(data: &[u8]) -> Result<usize, SnapshotFileError> {
    let mut c = Cursor { data, pos: 12 };
    let label_len = c.u32("label length")?;
    c.take(label_len as usize, "label")?;
    c.take(32, "content hash")?;
    c.take(4 * 8, "counts")?;
    let node_count = c.u64("node count")?;
    for _ in 0..node_count {
        c.take(9, "node id and kind")?;
        let title_len = c.u32("title length")?;
        c.take(title_len as usize, "title")?;
    }
    for _ in 0..4 {
        let offsets_len = c.u64("offsets length")?;
        let n = c.len_checked(offsets_len, 8, "offsets")?;
        c.take(n * 8, "offsets")?;
        let targets_len = c.u64("targets length")?;
        let n = c.len_checked(targets_len, 4, "targets")?;
        c.take(n * 4, "targets")?;
    }
    if data.len() - c.pos != 32 {
        return Err(SnapshotFileError::Truncated("trailer"));
    }
    Ok(c.pos)
}

/// Reads, verifies and rebuilds a snapshot.
pub fn load_snapshot(path: &Path) -> Result<GraphSnapshot, SnapshotFileError> {
    let data = fs::read(path)?;
    if data.len() < 8 {
        return Err(SnapshotFileError::Truncated("header"));
    }
    if &data[..8] != MAGIC {
        return Err(SnapshotFileError::BadMagic);
    }
    if data.len() < 12 {
        return Err(SnapshotFileError::Truncated("version"));
    }
    let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotFileError::VersionMismatch { found: version });
    }
    let body_end = structure_end(&data)?;
    let mut hasher = Sha256::new();
    hasher.update(&data[..body_end]);
    let digest: [u8; 32] = hasher.finalize().into();
    if digest != data[body_end..] {
        return Err(SnapshotFileError::ChecksumMismatch("file body"));
    }

    let corrupt = |what: &str| SnapshotFileError::Corrupt(what.to_string());
    let mut c = Cursor { data: &data, pos: 12 };
    let label_len = c.u32("label length")? as usize;
    let label = String::from_utf8(c.take(label_len, "label")?.to_vec())
        .map_err(|_| corrupt("label is not UTF-8"))?;
    let stored_hash: [u8; 32] = c.take(32, "content hash")?.try_into().unwrap();
    let counts = GraphCounts {
        articles: c.u64("counts")?,
        categories: c.u64("counts")?,
        links_to: c.u64("counts")?,
        belongs_to: c.u64("counts")?,
    };
    let node_count = c.u64("node count")? as usize;
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let id = PageId(c.u64("node id")?);
        let kind = match c.u8("node kind")? {
            0 => NodeKind::Article,
            1 => NodeKind::Category,
            other => return Err(corrupt(&format!("unknown node kind byte {other}"))),
        };
        let title_len = c.u32("title length")? as usize;
        let title = Title::new(c.take(title_len, "title")?);
        nodes.push(Node { id, title, kind });
    }
    for pair in nodes.windows(2) {
        if pair[0].id >= pair[1].id {
            return Err(corrupt("node table not sorted by id"));
        }
    }

    let mut sections = Vec::with_capacity(4);
    for _ in 0..4 {
        let offsets_len = c.u64("offsets length")? as usize;
        if offsets_len != node_count + 1 {
            return Err(corrupt("adjacency offsets length does not match node count"));
        }
        let mut offsets = Vec::with_capacity(offsets_len);
        for _ in 0..offsets_len {
            offsets.push(c.u64("offsets")?);
        }
        let targets_len = c.u64("targets length")? as usize;
        let mut targets = Vec::with_capacity(targets_len);
        for _ in 0..targets_len {
            targets.push(c.u32("targets")?);
        }
        if offsets.first() != Some(&0) || offsets.last() != Some(&(targets_len as u64)) {
            return Err(corrupt("adjacency offsets do not span the target section"));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(corrupt("adjacency offsets not monotonic"));
        }
        if targets.iter().any(|&t| t as usize >= node_count) {
            return Err(corrupt("adjacency target out of range"));
        }
        sections.push(Csr { offsets, targets });
    }
    let adj: [Csr; 4] = sections.try_into().expect("four sections read");

    let mut pos_by_id = HashMap::with_capacity(nodes.len());
    let mut pos_by_title: [HashMap<Title, u32>; 2] = [HashMap::new(), HashMap::new()];
    let mut articles = 0u64;
    for (pos, node) in nodes.iter().enumerate() {
        pos_by_id.insert(node.id, pos as u32);
        let slot = match node.kind {
            NodeKind::Article => 0,
            NodeKind::Category => 1,
        };
        if pos_by_title[slot].insert(node.title.clone(), pos as u32).is_some() {
            return Err(corrupt("duplicate (kind, title) in node table"));
        }
        if node.kind == NodeKind::Article {
            articles += 1;
        }
    }
    let recomputed = GraphCounts {
        articles,
        categories: nodes.len() as u64 - articles,
        links_to: adj[0].edge_count(),
        belongs_to: adj[2].edge_count(),
    };
    if recomputed != counts {
        return Err(corrupt("stored counts do not match stored data"));
    }
    if content_hash(&nodes, &adj) != stored_hash {
        return Err(SnapshotFileError::ChecksumMismatch("content hash"));
    }

    Ok(GraphSnapshot {
        id: SnapshotId::new(label, stored_hash),
        nodes,
        pos_by_id,
        pos_by_title,
        adj,
        counts,
    })
}
