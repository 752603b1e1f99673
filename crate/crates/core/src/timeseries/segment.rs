//! Day segment files.
//!
//! One segment holds every stored (page_id, hour, count) triple of one UTC
//! calendar day, sorted by (page_id, hour). Layout, little-endian:
//!
//! ```text
//! magic         8 bytes  "WGTSSEG1"
//! version       u32
//! day           i64 (epoch seconds of UTC midnight)
//! triple_count  u64
//! block_size    u32 (triples per block)
//! block_count   u32
//! block index   per block: first page u64, first hour i64, file offset u64
//! data          triple_count x (page u64, hour i64, count u32)
//! trailer       sha256 of every preceding byte
//! ```
//!
//! Files are content-addressed: the file name embeds the day and the first
//! twelve hex digits of the trailer hash. A segment is never modified after
//! the rename that publishes it; re-ingesting a day writes a new file and
//! repoints the manifest, so frozen manifests keep working.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::os::unix::fs::FileExt;
use std::path::Path;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::types::day_start;
use crate::util::{hex, publish, HashingWriter};

use super::TsError;

const MAGIC: &[u8; 8] = b"WGTSSEG1";
const SEGMENT_VERSION: u32 = 1;
/// Triples per index block; 512 keeps blocks around 10 KiB.
const BLOCK_TRIPLES: u32 = 512;
const TRIPLE_BYTES: usize = 20;
const HEADER_BYTES: usize = 8 + 4 + 8 + 8 + 4 + 4;
const INDEX_ENTRY_BYTES: usize = 24;

/// A stored triple: page id, hour as epoch seconds, count.
pub(crate) type Triple = (u64, i64, u32);

#[derive(Debug, Clone, Copy)]
struct IndexEntry {
    page: u64,
    hour: i64,
    offset: u64,
}

impl IndexEntry {
    fn key(&self) -> (u64, i64) {
        (self.page, self.hour)
    }
}

/// Writes a segment for `day` and returns its content-addressed file name.
/// Triples must be sorted by (page, hour) with no duplicate keys and no zero
/// counts; the store guarantees this.
pub(crate) fn write_segment(
    dir: &Path,
    day: NaiveDate,
    triples: &[Triple],
) -> Result<String, TsError> {
    debug_assert!(triples.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
    let staging = dir.join(format!(".seg-{}.tmp", day.format("%Y%m%d")));
    let file = File::create(&staging)?;
    let mut w = HashingWriter::new(BufWriter::new(file));

    let block_count = (triples.len() as u64).div_ceil(BLOCK_TRIPLES as u64) as u32;
    w.write_all(MAGIC)?;
    w.write_all(&SEGMENT_VERSION.to_le_bytes())?;
    w.write_all(&day_start(day).timestamp().to_le_bytes())?;
    w.write_all(&(triples.len() as u64).to_le_bytes())?;
    w.write_all(&BLOCK_TRIPLES.to_le_bytes())?;
    w.write_all(&block_count.to_le_bytes())?;
    let data_start = HEADER_BYTES as u64 + block_count as u64 * INDEX_ENTRY_BYTES as u64;
    for block in 0..block_count {
        let first = triples[block as usize * BLOCK_TRIPLES as usize];
        w.write_all(&first.0.to_le_bytes())?;
        w.write_all(&first.1.to_le_bytes())?;
        let offset = data_start + block as u64 * BLOCK_TRIPLES as u64 * TRIPLE_BYTES as u64;
        w.write_all(&offset.to_le_bytes())?;
    }
    for &(page, hour, count) in triples {
        w.write_all(&page.to_le_bytes())?;
        w.write_all(&hour.to_le_bytes())?;
        w.write_all(&count.to_le_bytes())?;
    }
    let digest: [u8; 32] = w.hasher.finalize().into();
    let mut inner = w.inner;
    inner.write_all(&digest)?;
    let file = inner.into_inner().map_err(|e| e.into_error())?;

    let name = format!("seg-{}-{}.bin", day.format("%Y%m%d"), &hex(&digest)[..12]);
    let path = dir.join(&name);
    publish(file, &staging, &path)?;
    Ok(name)
}

/// An open, checksum-verified day segment. Reads go through the block index
/// with positioned I/O, so concurrent readers share one handle.
pub(crate) struct Segment {
    file: File,
    pub file_name: String,
    pub content_hash: [u8; 32],
    index: Vec<IndexEntry>,
    triple_count: u64,
    block_size: u32,
}

impl Segment {
    /// Opens and fully verifies a segment file. The one-time verification
    /// read is the price for trusting positioned reads afterwards.
    pub(crate) fn open(path: &Path, expected_day: NaiveDate) -> Result<Segment, TsError> {
        let data = std::fs::read(path)?;
        if data.len() < 8 {
            return Err(TsError::Truncated("segment header"));
        }
        if &data[..8] != MAGIC {
            return Err(TsError::BadMagic);
        }
        if data.len() < HEADER_BYTES {
            return Err(TsError::Truncated("segment header"));
        }
        let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
        if version != SEGMENT_VERSION {
            return Err(TsError::VersionMismatch { found: version });
        }
        let day_secs = i64::from_le_bytes(data[12..20].try_into().unwrap());
        let triple_count = u64::from_le_bytes(data[20..28].try_into().unwrap());
        let block_size = u32::from_le_bytes(data[28..32].try_into().unwrap());
        let block_count = u32::from_le_bytes(data[32..36].try_into().unwrap());

        let index_bytes = block_count as usize * INDEX_ENTRY_BYTES;
        let data_bytes = triple_count as usize * TRIPLE_BYTES;
        let expected_len = HEADER_BYTES + index_bytes + data_bytes + 32;
        if data.len() < expected_len {
            return Err(TsError::Truncated("segment body"));
        }
        if data.len() > expected_len {
            return Err(TsError::Corrupt("segment has trailing bytes".into()));
        }
        let mut hasher = Sha256::new();
        hasher.update(&data[..data.len() - 32]);
        let digest: [u8; 32] = hasher.finalize().into();
        if digest != data[data.len() - 32..] {
            return Err(TsError::ChecksumMismatch);
        }

        let day = day_start_from_secs(day_secs)
            .ok_or_else(|| TsError::Corrupt("segment day is not UTC midnight".into()))?;
        if day != expected_day {
            return Err(TsError::Corrupt(format!(
                "segment covers {day}, manifest says {expected_day}"
            )));
        }
        if block_size == 0 && triple_count > 0 {
            return Err(TsError::Corrupt("zero block size".into()));
        }
        let mut index = Vec::with_capacity(block_count as usize);
        for i in 0..block_count as usize {
            let at = HEADER_BYTES + i * INDEX_ENTRY_BYTES;
            index.push(IndexEntry {
                page: u64::from_le_bytes(data[at..at + 8].try_into().unwrap()),
                hour: i64::from_le_bytes(data[at + 8..at + 16].try_into().unwrap()),
                offset: u64::from_le_bytes(data[at + 16..at + 24].try_into().unwrap()),
            });
        }
        if index.windows(2).any(|w| w[0].key() >= w[1].key()) {
            return Err(TsError::Corrupt("block index not sorted".into()));
        }
        drop(data);

        let file = File::open(path)?;
        let file_name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Segment {
            file,
            file_name,
            content_hash: digest,
            index,
            triple_count,
            block_size,
        })
    }

    pub(crate) fn triple_count(&self) -> u64 {
        self.triple_count
    }

    fn block_len(&self, block: usize) -> usize {
        let start = block as u64 * self.block_size as u64;
        (self.triple_count - start).min(self.block_size as u64) as usize
    }

    fn read_block(&self, block: usize) -> Result<Vec<Triple>, TsError> {
        let entry = self.index[block];
        let len = self.block_len(block);
        let mut buf = vec![0u8; len * TRIPLE_BYTES];
        self.file.read_exact_at(&mut buf, entry.offset)?;
        let mut out = Vec::with_capacity(len);
        for chunk in buf.chunks_exact(TRIPLE_BYTES) {
            out.push((
                u64::from_le_bytes(chunk[..8].try_into().unwrap()),
                i64::from_le_bytes(chunk[8..16].try_into().unwrap()),
                u32::from_le_bytes(chunk[16..20].try_into().unwrap()),
            ));
        }
        Ok(out)
    }

    /// Stored (hour, count) pairs for one page with hour in [start, end),
    /// ascending. Touches only the blocks that can contain the range.
    pub(crate) fn query(
        &self,
        page: u64,
        start: i64,
        end: i64,
    ) -> Result<Vec<(i64, u32)>, TsError> {
        let lo = (page, start);
        let hi = (page, end);
        // last block whose first key is <= lo can still contain lo
        let mut block = self.index.partition_point(|e| e.key() <= lo);
        block = block.saturating_sub(1);
        let mut out = Vec::new();
        while block < self.index.len() {
            if self.index[block].key() >= hi {
                break;
            }
            for (p, h, c) in self.read_block(block)? {
                if (p, h) >= hi {
                    return Ok(out);
                }
                if p == page && h >= start {
                    out.push((h, c));
                }
            }
            block += 1;
        }
        Ok(out)
    }

    /// All triples in key order.
    pub(crate) fn cursor(self: &std::sync::Arc<Self>) -> SegmentCursor {
        SegmentCursor {
            segment: std::sync::Arc::clone(self),
            block: 0,
            buf: Vec::new(),
            pos: 0,
        }
    }
}

fn day_start_from_secs(secs: i64) -> Option<NaiveDate> {
    let t = chrono::DateTime::from_timestamp(secs, 0)?;
    if t.timestamp() % 86_400 != 0 {
        return None;
    }
    Some(t.date_naive())
}

/// Block-buffered iterator over a segment's triples.
pub(crate) struct SegmentCursor {
    segment: std::sync::Arc<Segment>,
    block: usize,
    buf: Vec<Triple>,
    pos: usize,
}

impl Iterator for SegmentCursor {
    type Item = Result<Triple, TsError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.pos < self.buf.len() {
                let t = self.buf[self.pos];
                self.pos += 1;
                return Some(Ok(t));
            }
            if self.block >= self.segment.index.len() {
                return None;
            }
            match self.segment.read_block(self.block) {
                Ok(buf) => {
                    self.buf = buf;
                    self.pos = 0;
                    self.block += 1;
                }
                Err(e) => {
                    self.block = self.segment.index.len();
                    return Some(Err(e));
                }
            }
        }
    }
}
